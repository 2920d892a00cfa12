use num_complex::Complex64;
use serde_json::json;
use sfcoeff_core::modforms::{builtin_newform, builtin_newforms_for, level1_basis, NewformRecord};
use sfcoeff_core::newform_io::{load_newforms, parse_newforms_unchecked, save_newforms, validate};
use sfcoeff_core::rslfun::{c_constant, contour_sum_oracle, direct_weighted_sum, ContourParams};
use sfcoeff_core::threshold::{asymptotic_fit, geometric_grid, legacy_bound_log, scan, theorem_bound, ScanConfig, ScanEntry, ThresholdReport};
use sfcoeff_core::weights::SmoothWeight;
use sfcoeff_core::{Error, Parallelism};

use crate::config::RunConfig;
use crate::report::{num, render, Artifact};
use crate::Failure;

pub fn dispatch(cfg: &RunConfig, par: Parallelism) -> Result<String, Failure> {
    let artifact = match cfg.command.as_str() {
        "basis" => basis(cfg, par)?,
        "eigen" => eigen(cfg, par)?,
        "sfmin" => thresholds(cfg, product_grid(cfg, par)?, par)?,
        "scan" => {
            let mut grid = if cfg.k.is_empty() && cfg.level.is_empty() { Vec::new() } else { product_grid(cfg, par)? };
            grid.extend(cfg.grid.iter().cloned());
            if grid.is_empty() {
                return Err(Failure::Usage("scan needs --grid or --k and --N".into()));
            }
            thresholds(cfg, grid, par)?
        }
        "asymp" => asymp(cfg, par)?,
        "cross" => cross(cfg, par)?,
        "oracle" => oracle(cfg, par)?,
        "bounds" => bounds(cfg)?,
        "validate" => return validate_file(cfg),
        other => return Err(Failure::Usage(format!("unknown command {other:?}"))),
    };
    Ok(render(&artifact, cfg))
}

fn require_lists(cfg: &RunConfig) -> Result<(), Failure> {
    if cfg.k.is_empty() {
        return Err(Failure::Usage("missing required --k".into()));
    }
    if cfg.level.is_empty() {
        return Err(Failure::Usage("missing required --N".into()));
    }
    Ok(())
}

fn load_data(cfg: &RunConfig) -> Result<Vec<NewformRecord>, Failure> {
    Ok(match &cfg.data {
        Some(path) => load_newforms(path)?,
        None => Vec::new(),
    })
}

fn weight(cfg: &RunConfig) -> Result<SmoothWeight, Failure> {
    Ok(SmoothWeight::clamped(cfg.beta)?.with_tolerance(cfg.weight_tolerance)?)
}

/// The k × N product, each with `--spec` or the first built-in newform of that weight and level.
fn product_grid(cfg: &RunConfig, par: Parallelism) -> Result<Vec<ScanEntry>, Failure> {
    require_lists(cfg)?;
    let mut out = Vec::new();
    for &k in &cfg.k {
        for &level in &cfg.level {
            let spec = match &cfg.spec {
                Some(s) => s.clone(),
                None => builtin_newforms_for(k, level, 2, par)?
                    .first()
                    .map(|r| r.label.clone())
                    .ok_or_else(|| Error::InvalidArgument(format!("no built-in newform of weight {k} and level dividing {level}; pass --spec")))?,
            };
            out.push(ScanEntry { weight: k, level, spec });
        }
    }
    Ok(out)
}

fn thresholds(cfg: &RunConfig, grid: Vec<ScanEntry>, par: Parallelism) -> Result<Artifact, Failure> {
    let data = load_data(cfg)?;
    let sc = ScanConfig { eps: cfg.eps, a0: cfg.a0, search_limit: cfg.search_limit, decomposition_prec: cfg.prec };
    let reports = scan(&grid, &sc, &data, par);
    let mut a = Artifact::new(&ThresholdReport::CSV_HEADER);
    a.rows = reports.iter().map(ThresholdReport::csv_fields).collect();
    a.plot = vec![1, 2, 3, 7];
    a.summarize("entries", reports.len());
    a.summarize("satisfied", reports.iter().filter(|r| r.satisfied).count());
    a.summarize("errors", reports.iter().filter(|r| r.error.is_some()).count());
    a.results = json!(reports);
    Ok(a)
}

fn bounds(cfg: &RunConfig) -> Result<Artifact, Failure> {
    require_lists(cfg)?;
    let mut a = Artifact::new(&["k", "N", "eps", "a0", "theorem_bound", "theorem_bound_log", "legacy_bound_log", "log_ratio"]);
    let mut rows = Vec::new();
    for &k in &cfg.k {
        for &level in &cfg.level {
            let t = theorem_bound(k, level, cfg.eps)?;
            let l = legacy_bound_log(k, level, cfg.a0)?;
            a.rows.push(vec![k.to_string(), level.to_string(), num(cfg.eps), num(cfg.a0), num(t), num(t.ln()), num(l), num(l - t.ln())]);
            rows.push(json!({ "k": k, "N": level, "theorem_bound": t, "legacy_bound_log": l }));
        }
    }
    a.plot = vec![0, 5, 6];
    a.results = json!(rows);
    Ok(a)
}

fn basis(cfg: &RunConfig, par: Parallelism) -> Result<Artifact, Failure> {
    let (k, level) = (cfg.single_k()?, cfg.single_level()?);
    let n = cfg.prec.max(2);
    let mut forms: Vec<(String, Vec<String>)> = Vec::new();
    if level == 1 {
        let space = level1_basis(k, n)?;
        for (i, b) in space.full_basis.iter().enumerate() {
            forms.push((format!("m{}", i + 1), b.coeffs().iter().map(|c| c.to_string()).collect()));
        }
        for (i, b) in space.basis.iter().enumerate() {
            forms.push((format!("s{}", i + 1), b.coeffs().iter().map(|c| c.to_string()).collect()));
        }
    } else {
        // known newforms of level M | N and their lifts f(δτ), δ | N/M
        for r in builtin_newforms_for(k, level, n, par)? {
            let quotient = level / r.level;
            for delta in (1..=quotient).filter(|d| quotient % d == 0) {
                let coeffs = (0..n)
                    .map(|m| {
                        if m == 0 || m as u64 % delta != 0 {
                            return "0".to_string();
                        }
                        let j = m / delta as usize;
                        match r.exact_coefficient(j) {
                            Some(c) => c.to_string(),
                            None => num(r.coefficient(j).map(|c| c.re).unwrap_or(f64::NAN)),
                        }
                    })
                    .collect();
                forms.push((format!("{}@{delta}", r.label), coeffs));
            }
        }
    }
    let mut a = Artifact::new(&["form", "n", "coefficient"]);
    for (name, coeffs) in &forms {
        for (m, c) in coeffs.iter().enumerate() {
            a.rows.push(vec![name.clone(), m.to_string(), c.clone()]);
        }
    }
    a.plot = vec![1, 2];
    a.summarize("dimension", forms.len());
    a.results = json!(forms.iter().map(|(name, c)| json!({ "form": name, "coefficients": c })).collect::<Vec<_>>());
    Ok(a)
}

fn eigen(cfg: &RunConfig, par: Parallelism) -> Result<Artifact, Failure> {
    let (k, level) = (cfg.single_k()?, cfg.single_level()?);
    let records = builtin_newforms_for(k, level, cfg.prec.max(1), par)?;
    if let Some(path) = &cfg.nf_output {
        save_newforms(&records, path)?;
    }
    let mut a = Artifact::new(&["label", "level", "weight", "n", "lambda_re", "lambda_im", "a_n"]);
    for r in &records {
        for (n, l) in r.lambdas().iter().enumerate().skip(1) {
            let exact = r.exact_coefficient(n).map(|c| c.to_string()).unwrap_or_default();
            a.rows.push(vec![r.label.clone(), r.level.to_string(), r.weight.to_string(), n.to_string(), num(l.re), num(l.im), exact]);
        }
    }
    a.plot = vec![3, 4];
    a.summarize("records", records.len());
    a.results = json!(records
        .iter()
        .map(|r| json!({ "label": r.label, "level": r.level, "weight": r.weight, "lambda": r.lambdas()[1..].iter().map(|c| [c.re, c.im]).collect::<Vec<_>>() }))
        .collect::<Vec<_>>());
    Ok(a)
}

/// Resolves a form selector: an index among the built-in forms of (k, N), `dataI`, or a label.
fn select(selector: &str, k: u32, level: u64, n_max: usize, data: &[NewformRecord], par: Parallelism) -> Result<NewformRecord, Failure> {
    let record = if let Ok(i) = selector.parse::<usize>() {
        let forms = builtin_newforms_for(k, level, n_max, par)?;
        let count = forms.len();
        forms.into_iter().nth(i.wrapping_sub(1)).ok_or_else(|| Error::InvalidArgument(format!("form index {i} out of range; weight {k} level {level} has {count} built-in forms")))?
    } else if let Some(i) = selector.strip_prefix("data").and_then(|s| s.parse::<usize>().ok()) {
        let r = data.get(i.wrapping_sub(1)).ok_or_else(|| Error::InvalidArgument(format!("no data record {i}")))?;
        if r.prec() < n_max {
            return Err(Error::PrecisionExceeded { requested: n_max, available: r.prec() }.into());
        }
        r.clone()
    } else {
        builtin_newform(selector, n_max, par)?
    };
    if record.weight != k || level % record.level != 0 {
        return Err(Error::InvalidArgument(format!("form {} has weight {} and level {}, not weight {k} and level dividing {level}", record.label, record.weight, record.level)).into());
    }
    Ok(record)
}

fn pair(cfg: &RunConfig, n_max: usize, default_g: &str, par: Parallelism) -> Result<(NewformRecord, NewformRecord, u64), Failure> {
    let (k, level) = (cfg.single_k()?, cfg.single_level()?);
    let data = load_data(cfg)?;
    let f_sel = cfg.f.as_deref().unwrap_or("1");
    let g_sel = cfg.g.as_deref().unwrap_or(if default_g.is_empty() { f_sel } else { default_g });
    let f = select(f_sel, k, level, n_max, &data, par)?;
    let g = if g_sel == f_sel { f.clone() } else { select(g_sel, k, level, n_max, &data, par)? };
    Ok((f, g, level))
}

fn fit_grid(cfg: &RunConfig) -> Vec<f64> {
    geometric_grid(cfg.x_min, cfg.x_max, cfg.x_points)
}

fn asymp(cfg: &RunConfig, par: Parallelism) -> Result<Artifact, Failure> {
    let xs = fit_grid(cfg);
    let n_max = (cfg.x_max.ceil() as usize).max(cfg.c_cutoff as usize);
    let (f, _, level) = pair(cfg, n_max, "", par)?;
    let w = weight(cfg)?;
    let fit = asymptotic_fit(&f, &f, &w, level, &xs, par)?;
    let c = c_constant(&f, &w, level, cfg.c_cutoff, par)?;
    let slope = fit.slope.unwrap_or(f64::NAN);
    let mut a = Artifact::new(&["x", "S", "main_term", "model", "deviation"]);
    for &(x, s) in &fit.samples {
        let model = slope * x + fit.amplitude * x.powf(fit.exponent);
        a.rows.push(vec![num(x), num(s.re), num(slope * x), num(model), num((s.re - slope * x).abs())]);
    }
    a.plot = vec![0, 1, 3];
    a.summarize("form", &f.label);
    a.summarize("slope", num(slope));
    a.summarize("amplitude", num(fit.amplitude));
    a.summarize("exponent", num(fit.exponent));
    a.summarize("residual", num(fit.residual));
    a.summarize("residual_without_main_term", num(fit.residual_without_main_term.unwrap_or(f64::NAN)));
    a.summarize("envelope_amplitude", num(fit.envelope_amplitude.unwrap_or(f64::NAN)));
    a.summarize("envelope_holds", fit.envelope_holds.unwrap_or(false));
    a.summarize("c_constant", num(c.value));
    a.summarize("relative_gap", num((slope - c.value).abs() / slope.abs()));
    a.results = json!({ "fit": fit, "c_constant": c });
    Ok(a)
}

fn cross(cfg: &RunConfig, par: Parallelism) -> Result<Artifact, Failure> {
    let xs = fit_grid(cfg);
    let (f, g, level) = pair(cfg, cfg.x_max.ceil() as usize, "2", par)?;
    let w = weight(cfg)?;
    let fit = asymptotic_fit(&f, &g, &w, level, &xs, par)?;
    let mut a = Artifact::new(&["x", "S_re", "S_im", "abs_over_x"]);
    for &(x, s) in &fit.samples {
        a.rows.push(vec![num(x), num(s.re), num(s.im), num(s.norm() / x)]);
    }
    let max_ratio = fit.samples.iter().map(|(x, s)| s.norm() / x).fold(0.0, f64::max);
    a.plot = vec![0, 1, 3];
    a.summarize("f", &f.label);
    a.summarize("g", &g.label);
    a.summarize("diagonal", fit.diagonal);
    a.summarize("exponent", num(fit.exponent));
    a.summarize("amplitude", num(fit.amplitude));
    a.summarize("residual", num(fit.residual));
    a.summarize("max_abs_over_x", num(max_ratio));
    a.results = json!({ "fit": fit });
    Ok(a)
}

fn oracle(cfg: &RunConfig, par: Parallelism) -> Result<Artifact, Failure> {
    if cfg.x.is_empty() {
        return Err(Failure::Usage("oracle needs at least one --x".into()));
    }
    let cutoff = |x: f64| cfg.p_cutoff.unwrap_or(x.ceil().max(1.0) as u64);
    let n_max = cfg.x.iter().map(|&x| cutoff(x).max(x.ceil() as u64)).max().unwrap_or(1) as usize;
    let (f, g, level) = pair(cfg, n_max, "", par)?;
    let w = weight(cfg)?;
    let mut a = Artifact::new(&["x", "direct_re", "direct_im", "contour_re", "contour_im", "relative_difference", "tail_estimate"]);
    let mut results = Vec::new();
    for &x in &cfg.x {
        let d = direct_weighted_sum(&f, &g, &w, x, level, par)?;
        let params = ContourParams { sigma0: cfg.sigma0, t_max: cfg.t_max, p_cutoff: cutoff(x) };
        let c = contour_sum_oracle(&f, &g, &w, x, level, params, par)?;
        let rel = relative(d.value, c.value);
        a.rows.push(vec![num(x), num(d.value.re), num(d.value.im), num(c.value.re), num(c.value.im), num(rel), num(c.tail_estimate)]);
        results.push(json!({ "x": x, "direct": d, "contour": c, "relative_difference": rel }));
    }
    a.plot = vec![0, 1, 3];
    a.summarize("f", &f.label);
    a.summarize("g", &g.label);
    a.results = json!(results);
    Ok(a)
}

fn relative(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

fn validate_file(cfg: &RunConfig) -> Result<String, Failure> {
    let path = cfg.data.as_deref().ok_or_else(|| Failure::Usage("validate needs --data".into()))?;
    let records = parse_newforms_unchecked(&std::fs::read_to_string(path)?)?;
    let mut a = Artifact::new(&["index", "label", "level", "weight", "count", "valid", "violations", "first_violation"]);
    let mut invalid = Vec::new();
    let mut results = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let report = validate(r, cfg.validation_tolerance);
        let first = report.violations.first().map(|v| format!("{} (deviation {})", v.invariant, num(v.deviation))).unwrap_or_default();
        if !report.is_valid() {
            invalid.push(format!("record {} ({}): {first}", i + 1, r.label));
        }
        a.rows.push(vec![
            (i + 1).to_string(),
            r.label.clone(),
            r.level.to_string(),
            r.weight.to_string(),
            r.prec().to_string(),
            report.is_valid().to_string(),
            (report.violations.len() + report.omitted).to_string(),
            first,
        ]);
        results.push(json!({ "label": r.label, "report": report }));
    }
    a.summarize("records", records.len());
    a.summarize("invalid", invalid.len());
    a.results = json!(results);
    let text = render(&a, cfg);
    if invalid.is_empty() {
        Ok(text)
    } else {
        // the report still goes out before the failure status
        if let Some(out) = &cfg.output {
            std::fs::write(out, text.as_bytes())?;
        }
        Err(Error::InconsistentData(invalid.join("; ")).into())
    }
}
