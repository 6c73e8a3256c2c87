use std::io::Write;

use fragility::families::{normal_cdf, normal_pdf, FamilyKind};
use fragility::fragility::{fragility_report, theta_threshold, transfer_profile, vega_sensitivity};
use fragility::heuristic::{classify_exposure, run_heuristic, HeuristicSettings, ModelKind, ModelUnderTest, Parameter, ResponseTable, Verdict, DEFAULT_MULTIPLIERS};
use fragility::numerics::QuadratureSpec;
use fragility::payoff::{inherited_fragility, PayoffKind, PayoffMap, PayoffTable};
use fragility::robustness::antifragile_check;
use fragility::{ErrorCategory, ParametricFamily};

fn write_csv(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn tabulated_gaussian_tracks_the_analytic_family() {
    let mut csv = String::from("x,pdf\n");
    let n = 4001;
    for i in 0..n {
        let x = -10.0 + 20.0 * i as f64 / (n - 1) as f64;
        csv.push_str(&format!("{x},{}\n", normal_pdf(x)));
    }
    let file = write_csv(&csv);
    let tab = ParametricFamily::tabulated_from_csv(file.path(), 0.0, 1.0, QuadratureSpec::default()).unwrap();
    assert!(matches!(tab.kind(), FamilyKind::Tabulated(_)));
    let g = ParametricFamily::gaussian_scaling(0.0, 1.0).unwrap();
    assert!((tab.cdf(-1.0) - normal_cdf(-1.0)).abs() < 1e-5);
    for k in [-1.0, -2.0, -3.0] {
        let (a, b) = (vega_sensitivity(&tab, k).unwrap(), vega_sensitivity(&g, k).unwrap());
        assert!((a - b).abs() < 1e-3 * b, "{k}: {a} vs {b}");
    }
    assert!((theta_threshold(&tab).unwrap() - theta_threshold(&g).unwrap()).abs() < 5e-3);
}

#[test]
fn malformed_tables_are_input_errors() {
    let file = write_csv("x,density\n0,1\n1,1\n");
    let err = ParametricFamily::tabulated_from_csv(file.path(), 0.0, 1.0, QuadratureSpec::default()).unwrap_err();
    assert_eq!(err.category(), ErrorCategory::Input);
    assert!(PayoffTable::from_csv_reader("x,phi\n0,1\n1,0\n".as_bytes()).is_err());
}

#[test]
fn report_fields_are_consistent() {
    let g = ParametricFamily::gaussian_scaling(0.0, 1.0).unwrap();
    let r = fragility_report(&g, -2.0, None).unwrap();
    assert!((r.v - 0.6767).abs() < 1e-4);
    assert!((r.v - r.v_fd).abs() < 1e-4 * r.v);
    let p = transfer_profile(&g, -2.0, 101).unwrap();
    assert!((p.theta + 1.585).abs() < 5e-3);
    assert_eq!(p.grid.last().unwrap().0, 0.0);
    let header = csv_header(&r);
    assert!(header.split(',').any(|h| h == "V") && header.split(',').any(|h| h == "V_fd"));
}

/// Header row of the CSV serialization of a flat record.
fn csv_header<T: serde::Serialize>(v: &T) -> String {
    let mut w = csv::Writer::from_writer(vec![]);
    w.serialize(v).unwrap();
    let bytes = w.into_inner().unwrap();
    let text = String::from_utf8(bytes).unwrap();
    text.lines().next().unwrap_or_default().to_string()
}

#[test]
fn external_table_model_runs_end_to_end() {
    let file = write_csv("param_value,valuation\n7,25\n8,-75\n9,-200\n10,-550\n11,-1125\n");
    let table = ResponseTable::from_csv_path(file.path()).unwrap();
    let m = ModelUnderTest::new(ModelKind::ExternalTable(vec![table]), vec![Parameter::new("u", 9.0, 2.0)]).unwrap();
    let r = run_heuristic(&m, &HeuristicSettings::default(), &[1.0]).unwrap();
    assert_eq!(r[0].h_ratio, 1.5625);
    assert_eq!(r[0].verdict, Verdict::Fragile);
    // a wider scan leaves the sampled hull
    assert!(run_heuristic(&m, &HeuristicSettings::default(), &DEFAULT_MULTIPLIERS).is_err());
}

#[test]
fn payoff_taxonomy_and_antifragility_agree() {
    let g = ParametricFamily::gaussian_scaling(0.0, 1.0).unwrap();
    let convex = PayoffMap::new(PayoffKind::RightQuadratic { beta: 0.2, convex: true }, 0.0).unwrap();
    assert_eq!(classify_exposure(&convex, &g).unwrap().payoff_type.number(), 4);
    assert!(antifragile_check(&convex, &g, 1.0, 3.0, 1.25, 32).unwrap().antifragile);
    let kt = PayoffMap::new(PayoffKind::kahneman_tversky_default(), 0.0).unwrap();
    let deep = inherited_fragility(&kt, &g, -4.0).unwrap();
    assert!(deep < vega_sensitivity(&g, -4.0).unwrap());
}
