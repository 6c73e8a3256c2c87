use serde::Serialize;
use serde_json::{json, Value};

use fragility::fragility::{fragility_report, kappa_crossing, transfer_profile, vega_sensitivity, xi};
use fragility::heuristic::{
    classify_exposure, deficit_monte_carlo, omega_a, omega_b_pointwise_with, omega_b_sign_scan, omega_b_with,
    run_heuristic, stress_escalation, AlphaDistribution, HeuristicSettings, ModelKind, ModelUnderTest,
    PerturbedParameter,
};
use fragility::numerics::{mc_left_tail_expectation, McSpec};
use fragility::payoff::{inherited_fragility, transfer_theorem_check, zeta, PayoffMap};
use fragility::robustness::{
    antifragile_check, asymptotic_robustness_exp, asymptotic_robustness_pow, payoff_robustness, robustness,
    robustness_interval,
};
use fragility::ParametricFamily;

use crate::config::LoadedConfig;
use crate::error::CliError;
use crate::report::{num, CsvTable};

/// Default Monte Carlo run for the deficit histogram.
const DEFICIT_SAMPLES: u64 = 1_000_000;
/// Agreement band of the quadrature/Monte Carlo oracle, in standard errors.
const ORACLE_SIGMAS: f64 = 4.0;

pub struct Outcome {
    pub result: Value,
    pub tables: Vec<CsvTable>,
    pub summary: String,
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Output(e.to_string()))
}

#[derive(Serialize)]
struct FamilySummary {
    kind: &'static str,
    omega: f64,
    lambda: f64,
    s_minus: f64,
    s_plus: f64,
}

fn family_summary(f: &ParametricFamily) -> FamilySummary {
    FamilySummary { kind: f.kind().name(), omega: f.omega(), lambda: f.lambda(), s_minus: f.s_minus(), s_plus: f.s_plus() }
}

fn payoff_name(map: &Option<PayoffMap>) -> Value {
    map.as_ref().map_or(Value::Null, |m| json!(m.kind().name()))
}

pub fn measure(cfg: &LoadedConfig) -> Result<Outcome, CliError> {
    let family = cfg.family()?;
    let payoff = cfg.payoff(family.omega())?;
    let levels = cfg.stress_levels()?;
    let sweep = match &cfg.config.sweep {
        Some(s) => {
            if s.points < 2 || !s.from.is_finite() || !s.to.is_finite() || s.from >= s.to {
                return Err(CliError::Config("sweep needs from < to and at least 2 points".into()));
            }
            (s.from, s.to, s.points)
        }
        None => (family.omega() - 4.0 * family.scale(), family.omega(), 81),
    };
    let mut reports = Vec::new();
    for &k in &levels {
        let r = fragility_report(&family, k, cfg.config.delta_s)?;
        let mut v = to_value(&r)?;
        if let Some(map) = &payoff {
            v["V_payoff"] = json!(inherited_fragility(map, &family, k)?);
            v["zeta"] = json!(zeta(map, &family, k)?);
        }
        reports.push(v);
    }
    let mut header = vec!["K", "xi", "V"];
    if payoff.is_some() {
        header.push("V_payoff");
    }
    let mut grid = CsvTable::new("v_sweep", &header);
    let (a, b, n) = sweep;
    for i in 0..n {
        let k = if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 };
        let mut row = vec![num(k), num(xi(&family, k)?.value), num(vega_sensitivity(&family, k)?)];
        if let Some(map) = &payoff {
            row.push(num(inherited_fragility(map, &family, k)?));
        }
        grid.push(row);
    }
    let summary = levels
        .iter()
        .zip(&reports)
        .map(|(k, r)| format!("K={k}: V={:.6}", r["V"].as_f64().unwrap_or(f64::NAN)))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Outcome {
        result: json!({ "family": family_summary(&family), "payoff": payoff_name(&payoff), "levels": reports }),
        tables: vec![grid],
        summary,
    })
}

fn first_level(cfg: &LoadedConfig, explicit: Option<f64>) -> Result<f64, CliError> {
    match explicit {
        Some(k) => Ok(k),
        None => Ok(cfg.stress_levels()?[0]),
    }
}

pub fn transfer(cfg: &LoadedConfig) -> Result<Outcome, CliError> {
    let family = cfg.family()?;
    let payoff = cfg.payoff(family.omega())?;
    let tc = cfg.config.transfer.clone();
    let k = first_level(cfg, tc.as_ref().and_then(|t| t.k))?;
    let points = tc.as_ref().map_or(201, |t| t.points);
    if tc.as_ref().is_some_and(|t| t.kappa) {
        // explicit refusal above the threshold rather than a silent null
        kappa_crossing(&family, k)?;
    }
    let profile = transfer_profile(&family, k, points)?;
    let theorem = match &payoff {
        Some(map) => {
            let c = transfer_theorem_check(&family, k, map)?;
            let verdict = if c.direct_difference > 0.0 {
                "more fragile"
            } else if c.direct_difference < 0.0 {
                "less fragile"
            } else {
                "unchanged"
            };
            json!({ "check": to_value(&c)?, "signs_agree": c.signs_agree(), "verdict": verdict })
        }
        None => Value::Null,
    };
    let mut grid = CsvTable::new("transfer", &["x", "H"]);
    for &(x, h) in &profile.grid {
        grid.push(vec![num(x), num(h)]);
    }
    let summary = format!(
        "theta={:.5}, mu={:.5}, kappa={}",
        profile.theta,
        profile.mu_inflexion,
        profile.kappa.map_or("n/a".to_string(), |x| format!("{x:.5}"))
    );
    let mut result = json!({ "family": family_summary(&family), "profile": to_value(&profile)? });
    result["payoff"] = payoff_name(&payoff);
    result["theorem"] = theorem;
    Ok(Outcome { result, tables: vec![grid], summary })
}

pub fn robustness_cmd(cfg: &LoadedConfig) -> Result<Outcome, CliError> {
    let family = cfg.family()?;
    let payoff = cfg.payoff(family.omega())?;
    let rc = cfg.config.robustness.clone().ok_or_else(|| CliError::Config("`robustness` section is required".into()))?;
    let k = first_level(cfg, rc.k)?;
    let left = robustness(&family, k, rc.b, rc.grid_count)?;
    let exposure = match &payoff {
        Some(map) => Some(payoff_robustness(map, &family, k, rc.b, rc.grid_count)?),
        None => None,
    };
    let interval = match rc.interval {
        Some([k1, k2]) => Some(robustness_interval(&family, k1, k2, rc.b, rc.grid_count)?),
        None => None,
    };
    let mut asymptotic = Vec::new();
    for &a in &rc.exp_weights {
        asymptotic.push(asymptotic_robustness_exp(&family, k, a)?);
    }
    for &alpha in &rc.pow_weights {
        asymptotic.push(asymptotic_robustness_pow(&family, k, alpha)?);
    }
    let mut header = vec!["K", "V"];
    if exposure.is_some() {
        header.push("V_payoff");
    }
    let mut grid = CsvTable::new("robustness", &header);
    for (i, &(kp, v)) in left.grid.iter().enumerate() {
        let mut row = vec![num(kp), num(v)];
        if let Some(e) = &exposure {
            row.push(num(e.grid[i].1));
        }
        grid.push(row);
    }
    let summary = format!("R={:.6} (b={}): {}", left.r, rc.b, if left.passes { "robust" } else { "not robust" });
    Ok(Outcome {
        result: json!({
            "family": family_summary(&family),
            "payoff": payoff_name(&payoff),
            "left_ray": to_value(&left)?,
            "payoff_left_ray": to_value(&exposure)?,
            "interval": to_value(&interval)?,
            "asymptotic": to_value(&asymptotic)?,
        }),
        tables: vec![grid],
        summary,
    })
}

pub fn antifragility(cfg: &LoadedConfig) -> Result<Outcome, CliError> {
    let family = cfg.family()?;
    let map = cfg.payoff(family.omega())?.unwrap_or_else(|| PayoffMap::identity(family.omega()));
    let ac = cfg.config.antifragility.clone().ok_or_else(|| CliError::Config("`antifragility` section is required".into()))?;
    let report = antifragile_check(&map, &family, ac.l, ac.h.unwrap_or(f64::INFINITY), ac.b, ac.grid_count)?;
    let classification = match classify_exposure(&map, &family) {
        Ok(c) => to_value(&c)?,
        Err(fragility::Error::Ambiguous(msg)) => json!({ "ambiguous": msg }),
        Err(e) => return Err(e.into()),
    };
    let summary = format!(
        "W={:.6}, W_X={:.6}, a={:.6}: {}",
        report.w,
        report.w_x,
        report.a_scale,
        if report.antifragile { "antifragile" } else { "not antifragile" }
    );
    Ok(Outcome {
        result: json!({
            "family": family_summary(&family),
            "payoff": map.kind().name(),
            "report": to_value(&report)?,
            "classification": classification,
        }),
        tables: Vec::new(),
        summary,
    })
}

fn omega_b_family(cfg: &LoadedConfig, model: &ModelUnderTest) -> Result<ParametricFamily, CliError> {
    if cfg.config.family.is_some() {
        return cfg.family();
    }
    match model.kind() {
        ModelKind::BuiltinGaussianSigma { omega, .. } => {
            Ok(ParametricFamily::gaussian_scaling(*omega, model.parameters()[0].base)?.with_quadrature(cfg.quadrature()?)?)
        }
        _ => Err(CliError::Config("omega_b needs a `family` (or a builtin_gaussian_sigma model)".into())),
    }
}

pub fn heuristic(cfg: &LoadedConfig, seed: Option<u64>) -> Result<Outcome, CliError> {
    let hc = cfg.heuristic()?;
    let model = cfg.model()?;
    let settings = HeuristicSettings { ratio_tolerance: hc.ratio_tolerance, significance_fraction: hc.significance_fraction };
    let mut params = run_heuristic(&model, &settings, &hc.multipliers)?;
    if let Some(hw) = hc.omega_a_half_width {
        for p in params.iter_mut() {
            p.omega_a = omega_a(&model, &p.name, &AlphaDistribution::TwoPoint { half_width: hw })?;
        }
    }
    let mut tables = Vec::new();
    let mut broad = CsvTable::new("broadness", &["parameter", "multiplier", "H_ratio"]);
    for p in &params {
        for (m, h) in p.broadness.multipliers.iter().zip(&p.broadness.ratios) {
            broad.push(vec![p.name.clone(), num(*m), num(*h)]);
        }
    }
    tables.push(broad);

    let omega_b = match &hc.omega_b {
        Some(ob) => {
            let family = omega_b_family(cfg, &model)?;
            let which: PerturbedParameter = ob.parameter.into();
            let scan = if which == PerturbedParameter::Lambda {
                Some(omega_b_sign_scan(&family, ob.k, ob.delta_alpha, 64)?)
            } else {
                None
            };
            json!({
                "K": ob.k,
                "delta_alpha": ob.delta_alpha,
                "parameter": ob.parameter,
                "omega_B": omega_b_with(&family, ob.k, ob.delta_alpha, which)?,
                "omega_B_pointwise_at_K": omega_b_pointwise_with(&family, ob.k, ob.delta_alpha, which)?,
                "sign_scan": to_value(&scan)?,
            })
        }
        None => Value::Null,
    };

    let stress = match &cfg.config.stress {
        Some(_) => to_value(&stress_run(cfg, &model)?)?,
        None => Value::Null,
    };

    let classification = match (&cfg.config.family, &cfg.config.payoff) {
        (Some(_), Some(_)) => {
            let family = cfg.family()?;
            let map = cfg.payoff(family.omega())?.expect("payoff present");
            match classify_exposure(&map, &family) {
                Ok(c) => to_value(&c)?,
                Err(fragility::Error::Ambiguous(msg)) => json!({ "ambiguous": msg }),
                Err(e) => return Err(e.into()),
            }
        }
        _ => Value::Null,
    };

    let wants_mc = hc.deficit_mc.is_some() || matches!(model.kind(), ModelKind::BuiltinDeficit);
    let deficit = if wants_mc {
        let spec = cfg.monte_carlo(seed)?.unwrap_or(McSpec::new(DEFICIT_SAMPLES, seed.unwrap_or(0)));
        let (sigma, bins) = hc.deficit_mc.as_ref().map_or((1.0, 60), |d| (d.sigma, d.bins));
        let sim = deficit_monte_carlo(&spec, sigma, bins)?;
        let mut hist = CsvTable::new("deficit_histogram", &["lo", "hi", "count", "density"]);
        for b in &sim.histogram {
            hist.push(vec![num(b.lo), num(b.hi), b.count.to_string(), num(b.density)]);
        }
        tables.push(hist);
        json!({ "spec": spec, "sigma": sim.sigma, "summary": to_value(&sim.summary)? })
    } else {
        Value::Null
    };

    let summary = params
        .iter()
        .map(|p| format!("{}: H={:.6} {}", p.name, p.h_ratio, json!(p.verdict).as_str().unwrap_or("?")))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Outcome {
        result: json!({
            "model": model.kind().name(),
            "settings": to_value(&settings)?,
            "parameters": to_value(&params)?,
            "omega_b": omega_b,
            "stress": stress,
            "classification": classification,
            "deficit_simulation": deficit,
        }),
        tables,
        summary,
    })
}

fn stress_run(cfg: &LoadedConfig, model: &ModelUnderTest) -> Result<fragility::heuristic::StressEscalation, CliError> {
    let sc = cfg.config.stress.as_ref().ok_or_else(|| CliError::Config("`stress` section is required".into()))?;
    let name = sc.parameter.clone().unwrap_or_else(|| model.parameters()[0].name.clone());
    Ok(stress_escalation(model, &name, sc.base, sc.milder, sc.harsher, &sc.widenings)?)
}

pub fn stress(cfg: &LoadedConfig) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let run = stress_run(cfg, &model)?;
    let sc = cfg.config.stress.as_ref().expect("checked in stress_run");
    let mut grid = CsvTable::new("stress", &["widening", "milder", "harsher", "worsening", "improvement", "asymmetry", "flagged"]);
    for (w, s) in sc.widenings.iter().zip(&run.steps) {
        grid.push(vec![
            num(*w),
            num(s.milder),
            num(s.harsher),
            num(s.worsening),
            num(s.improvement),
            num(s.asymmetry),
            s.flagged.to_string(),
        ]);
    }
    let first = &run.steps[0];
    let summary = format!(
        "worsening {:.6} vs improvement {:.6}: {}",
        first.worsening,
        first.improvement,
        if first.flagged { "flagged" } else { "not flagged" }
    );
    Ok(Outcome { result: json!({ "model": model.kind().name(), "escalation": to_value(&run)? }), tables: vec![grid], summary })
}

#[derive(Serialize)]
struct OracleRow {
    #[serde(rename = "K")]
    k: f64,
    quadrature: f64,
    quadrature_error: f64,
    monte_carlo: f64,
    std_error: f64,
    z_score: f64,
    pass: bool,
}

pub fn oracle(cfg: &LoadedConfig, seed: Option<u64>) -> Result<Outcome, CliError> {
    let family = cfg.family()?;
    let spec = cfg.monte_carlo(seed)?.ok_or_else(|| CliError::Config("`monte_carlo` section is required".into()))?;
    let levels = cfg.stress_levels()?;
    let om = family.omega();
    let mut rows = Vec::new();
    for (i, &k) in levels.iter().enumerate() {
        let q = xi(&family, k)?;
        let stream = McSpec { stream_index: spec.stream_index + i as u64, ..spec };
        let mc = mc_left_tail_expectation(&family, |x| om - x, k, &stream)?;
        let z = if mc.std_error > 0.0 { (mc.mean - q.value) / mc.std_error } else { f64::INFINITY };
        rows.push(OracleRow {
            k,
            quadrature: q.value,
            quadrature_error: (q.direct - q.by_parts).abs(),
            monte_carlo: mc.mean,
            std_error: mc.std_error,
            z_score: z,
            pass: z.abs() <= ORACLE_SIGMAS,
        });
    }
    let all_pass = rows.iter().all(|r| r.pass);
    let mut grid = CsvTable::new("oracle", &["K", "quadrature", "monte_carlo", "std_error", "z_score"]);
    for r in &rows {
        grid.push(vec![num(r.k), num(r.quadrature), num(r.monte_carlo), num(r.std_error), num(r.z_score)]);
    }
    let summary = format!("{} level(s), all within {ORACLE_SIGMAS} se: {all_pass}", rows.len());
    Ok(Outcome {
        result: json!({
            "family": family_summary(&family),
            "sigma_band": ORACLE_SIGMAS,
            "rows": to_value(&rows)?,
            "all_pass": all_pass,
        }),
        tables: vec![grid],
        summary,
    })
}
