//! One function per subcommand. Each reads its inputs, calls the library and
//! packs the answer into a [`Report`].

use std::fs;
use std::path::{Path, PathBuf};

use quiverkit_core::classify::{
    classify_by_strata, enumerate_rep_types, enumerate_simple_roots, is_simple_root, local_quiver,
    stratum_dimension, strata, EnumerationLimits, RepresentationType,
};
use quiverkit_core::necklace::{
    is_cubic, parse_relations, parse_superpotential, relation_to_json, superpotential_to_json,
    vacualgebra_relations, PathPolynomial,
};
use quiverkit_core::numeric::{
    balance, check_relations, check_relations_exact, cycle_basis, is_mu_semistable, is_mu_stable, matrix_to_json,
    moment_map, moment_map_norm, numeric_quotient_dimension, parse_representation, random_representation,
    representation_to_json, trace_invariant, CycleLimits, Representation, StabilityMode, StabilityParameter,
    StabilityVerdict,
};
use quiverkit_core::quiver::{parse_setting, setting_to_json};
use quiverkit_core::reduction::{
    central_dimension, classify_singularity, etale_equivalent, first_separating_index, hereditary_model,
    hilbert_sequence, is_coregular, rational_hilbert, ReductionTrace, SingularityKind, SingularityVerdict,
};
use quiverkit_core::{CyclicData, DimensionVector, QuiverSetting};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::report::{Failure, Outcome, Report};
use crate::Options;

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_setting(path: &Path) -> Outcome<(String, QuiverSetting)> {
    let text = read(path)?;
    let s = parse_setting(&text).map_err(|e| Failure::from(e).in_file(&path.display().to_string()))?;
    Ok((text, s))
}

fn load_representation(s: &QuiverSetting, path: &Path) -> Outcome<(String, Representation)> {
    let text = read(path)?;
    let v = parse_representation(s, &text).map_err(|e| Failure::from(e).in_file(&path.display().to_string()))?;
    Ok((text, v))
}

fn with_file<T>(path: &Path, result: quiverkit_core::Result<T>) -> Outcome<T> {
    result.map_err(|e| Failure::from(e).in_file(&path.display().to_string()))
}

fn setting_line(s: &QuiverSetting) -> String {
    format!("adjacency={:?} dim={}", s.quiver.adjacency(), s.dim)
}

fn cyclic_json(c: &CyclicData) -> Value {
    json!({
        "l": c.len(),
        "multiplicities": c.multiplicities,
        "text": c.to_string(),
    })
}

fn one_based(vertices: &[usize]) -> Vec<usize> {
    vertices.iter().map(|v| v + 1).collect()
}

fn trace_json(t: &ReductionTrace) -> Value {
    json!({
        "initial": setting_to_json(&t.initial),
        "normalized": setting_to_json(&t.normalized),
        "steps": t.steps.iter().map(|step| json!({
            "kind": step.kind.to_string(),
            "vertex": step.vertex + 1,
            "detail": serde_json::to_value(&step.detail).expect("step details serialize"),
            "one_sided": step.detail.is_one_sided(),
            "after": setting_to_json(&step.after),
        })).collect::<Vec<_>>(),
        "final": setting_to_json(&t.final_setting),
        "used_kinds": t.used_kinds.iter().map(|k| k.to_string()).collect::<Vec<_>>(),
    })
}

fn trace_lines(t: &ReductionTrace, indent: &str) -> Vec<String> {
    let mut out = vec![format!("{indent}normalized: {}", setting_line(&t.normalized))];
    for (i, step) in t.steps.iter().enumerate() {
        let flag = if step.detail.is_one_sided() { " (one-sided)" } else { "" };
        out.push(format!(
            "{indent}step {}: R_{} at vertex {}{flag} -> {}",
            i + 1,
            step.kind,
            step.vertex + 1,
            setting_line(&step.after)
        ));
    }
    out.push(format!("{indent}final: {}", setting_line(&t.final_setting)));
    out
}

fn verdict_line(v: &SingularityVerdict) -> String {
    match (&v.cyclic_data, v.central_dim) {
        (Some(c), Some(d)) => format!("{}, cyclic={c}, dim={d}, auslander=true", v.kind),
        _ if v.kind == SingularityKind::Smooth => "Smooth, auslander=true".to_string(),
        _ => v.kind.to_string(),
    }
}

fn verdict_json(v: &SingularityVerdict) -> Value {
    json!({
        "kind": v.kind.to_string(),
        "cyclic_data": v.cyclic_data.as_ref().map(cyclic_json),
        "central_dim": v.central_dim,
        "auslander_regular": v.auslander_regular,
        "components": v.components.iter().map(|c| json!({
            "vertices": one_based(&c.vertices),
            "kind": c.kind.to_string(),
            "is_point": c.is_point,
            "cyclic_data": c.cyclic_data.as_ref().map(cyclic_json),
            "trace": trace_json(&c.trace),
        })).collect::<Vec<_>>(),
        "trace": trace_json(&v.trace),
    })
}

fn classify_report(text: &str, s: &QuiverSetting, opts: &Options) -> Report {
    let verdict = classify_singularity(s);
    let mut lines = vec![verdict_line(&verdict)];
    if opts.trace {
        for c in &verdict.components {
            lines.push(format!("component {:?}: {}", one_based(&c.vertices), c.kind));
            lines.extend(trace_lines(&c.trace, "  "));
        }
    }
    let result = json!({
        "setting": setting_to_json(s),
        "verdict": verdict_json(&verdict),
        "summary": verdict_line(&verdict),
    });
    Report::new("classify", &[text.as_bytes()], None, result, lines)
}

pub fn classify(path: &Path, opts: &Options) -> Outcome<Report> {
    let (text, s) = load_setting(path)?;
    Ok(classify_report(&text, &s, opts))
}

fn isolated_cyclic(path: &Path, s: &QuiverSetting) -> Outcome<CyclicData> {
    let verdict = classify_singularity(s);
    match verdict.cyclic_data {
        Some(c) => Ok(c),
        None => Err(Failure::refusal(format!(
            "{}: not comparable, the setting classifies as {}",
            path.display(),
            verdict.kind
        ))),
    }
}

pub fn etale_eq(first: &Path, second: &Path, degree: usize) -> Outcome<Report> {
    let (text_a, a) = load_setting(first)?;
    let (text_b, b) = load_setting(second)?;
    let ca = isolated_cyclic(first, &a)?;
    let cb = isolated_cyclic(second, &b)?;
    let equivalent = etale_equivalent(&ca, &cb)?;
    let separating = if equivalent {
        None
    } else {
        first_separating_index(&ca, &cb, degree)
    };
    let mut line = format!("equivalent={equivalent}, first={ca}, second={cb}");
    if let Some((i, ma, mb)) = &separating {
        line.push_str(&format!(", M_{i}: {ma} != {mb}"));
    } else if !equivalent {
        line.push_str(&format!(", no separating M_i with i <= {degree}"));
    }
    let result = json!({
        "first": cyclic_json(&ca),
        "second": cyclic_json(&cb),
        "equivalent": equivalent,
        "degree": degree,
        "separating": separating.map(|(i, ma, mb)| json!({
            "i": i,
            "first": ma.to_string(),
            "second": mb.to_string(),
        })),
    });
    Ok(Report::new("etale-eq", &[text_a.as_bytes(), text_b.as_bytes()], None, result, vec![line]))
}

pub fn vacua(setting: &Path, superpotential: &Path, verify: Option<usize>, opts: &Options) -> Outcome<Report> {
    let (text, s) = load_setting(setting)?;
    let w_text = read(superpotential)?;
    let q = &s.quiver;
    let w = with_file(superpotential, parse_superpotential(q, &w_text))?;
    let relations = vacualgebra_relations(q, &w);
    let cubic = is_cubic(q);
    let mut lines = vec![format!("W = {}", w.render(q))];
    let nonzero: Vec<_> = relations.iter().filter(|r| !r.is_zero()).collect();
    for r in &nonzero {
        lines.push(format!("d/d{}: {}", q.arrow(r.arrow).id, r.polynomial.render(q)));
    }
    if nonzero.is_empty() {
        lines.push("no relations".to_string());
    }
    lines.push(format!("cubic={cubic}"));
    let zero_arrows: Vec<&str> = relations
        .iter()
        .filter(|r| r.is_zero())
        .map(|r| q.arrow(r.arrow).id.as_str())
        .collect();
    let mut result = json!({
        "superpotential": superpotential_to_json(q, &w),
        "relations": nonzero.iter().map(|r| relation_to_json(q, r)).collect::<Vec<_>>(),
        "zero_derivatives": zero_arrows,
        "cubic": cubic,
    });
    let mut seed = None;
    if let Some(n) = verify {
        seed = Some(opts.seed);
        let polys: Vec<PathPolynomial> = relations.into_iter().map(|r| r.polynomial).collect();
        let rows = residual_table(&s, &polys, opts.seed, n, opts.tol)?;
        let passing = rows.iter().filter(|r| r["vanishes"] == Value::Bool(true)).count();
        lines.push(format!("verification: {passing}/{n} seeds with residual <= {:e}", opts.tol));
        for row in &rows {
            lines.push(format!(
                "  seed {}: residual {:.3e}, exact zero {}",
                row["seed"],
                row["residual"].as_f64().unwrap_or(f64::NAN),
                row["exact_zero"]
            ));
        }
        result["verification"] = json!({ "tolerance": opts.tol, "rows": rows });
    }
    Ok(Report::new("vacua", &[text.as_bytes(), w_text.as_bytes()], seed, result, lines))
}

fn residual_table(s: &QuiverSetting, polys: &[PathPolynomial], seed: u64, n: usize, tol: f64) -> Outcome<Vec<Value>> {
    (0..n as u64)
        .map(|i| {
            let v = random_representation(s, seed.wrapping_add(i), 1.0);
            let residual = check_relations(&v, polys)?;
            let exact = check_relations_exact(&v, polys)?;
            Ok(json!({
                "seed": seed.wrapping_add(i),
                "residual": residual,
                "exact_zero": exact.to_string() == "0",
                "vanishes": residual <= tol,
            }))
        })
        .collect()
}

pub fn strata_cmd(path: &Path) -> Outcome<Report> {
    let (text, s) = load_setting(path)?;
    let limits = EnumerationLimits::default();
    let reports = with_file(path, strata(&s.quiver, &s.dim, &limits))?;
    let kind = with_file(path, classify_by_strata(&s, &limits))?;
    let mut lines = vec![format!("{kind} ({} strata)", reports.len())];
    for r in &reports {
        lines.push(format!(
            "  {}: dim {}, {}, local {}",
            r.rep_type,
            r.stratum_dim,
            if r.smooth_point { "smooth" } else { "singular" },
            setting_line(&r.local_setting)
        ));
    }
    let result = json!({
        "kind": kind.to_string(),
        "strata": reports.iter().map(|r| json!({
            "type": r.rep_type.to_string(),
            "stratum_dim": r.stratum_dim,
            "smooth_point": r.smooth_point,
            "local_setting": setting_to_json(&r.local_setting),
        })).collect::<Vec<_>>(),
    });
    Ok(Report::new("strata", &[text.as_bytes()], None, result, lines))
}

pub fn local_quiver_cmd(path: &Path, rep_type: &str) -> Outcome<Report> {
    let (text, s) = load_setting(path)?;
    let tau: RepresentationType = rep_type.parse()?;
    tau.validate(&s.quiver, &s.dim)?;
    let local = local_quiver(&s.quiver, &tau)?;
    let stratum_dim = stratum_dimension(&s.quiver, &tau)?;
    let smooth = is_coregular(&local);
    let lines = vec![
        format!("type {tau}: local {}", setting_line(&local)),
        format!("stratum dim {stratum_dim}, {}", if smooth { "smooth point" } else { "singular point" }),
    ];
    let result = json!({
        "type": tau.to_string(),
        "local_setting": setting_to_json(&local),
        "stratum_dim": stratum_dim,
        "smooth_point": smooth,
    });
    Ok(Report::new("local-quiver", &[text.as_bytes(), rep_type.as_bytes()], None, result, lines))
}

pub fn simple(path: &Path) -> Outcome<Report> {
    let (text, s) = load_setting(path)?;
    let simple = is_simple_root(&s.quiver, &s.dim)?;
    let roots = with_file(path, enumerate_simple_roots(&s.quiver, &s.dim, &EnumerationLimits::default()))?;
    let listed: Vec<String> = roots.iter().map(DimensionVector::to_string).collect();
    let lines = vec![
        format!("alpha={} simple={simple}", s.dim),
        format!("simple roots below alpha: {}", listed.join(" ")),
    ];
    let result = json!({
        "alpha": s.dim,
        "simple": simple,
        "simple_roots_below": roots,
    });
    Ok(Report::new("simple", &[text.as_bytes()], None, result, lines))
}

pub fn types(path: &Path) -> Outcome<Report> {
    let (text, s) = load_setting(path)?;
    let all = with_file(path, enumerate_rep_types(&s.quiver, &s.dim, &EnumerationLimits::default()))?;
    let mut lines = vec![format!("{} representation types of {}", all.len(), s.dim)];
    let mut entries = Vec::with_capacity(all.len());
    for tau in &all {
        let d = stratum_dimension(&s.quiver, tau)?;
        lines.push(format!("  {tau}: stratum dim {d}"));
        entries.push(json!({ "type": tau.to_string(), "stratum_dim": d }));
    }
    let result = json!({ "alpha": s.dim, "types": entries });
    Ok(Report::new("types", &[text.as_bytes()], None, result, lines))
}

pub fn hilbert(path: &Path, degree: usize, blocks: &[u32]) -> Outcome<Report> {
    let (text, s) = load_setting(path)?;
    let c = isolated_cyclic(path, &s)?;
    let sequence: Vec<String> = hilbert_sequence(&c, degree).iter().map(ToString::to_string).collect();
    let rational = rational_hilbert(&c)?;
    let mut lines = vec![
        format!("cyclic={c}, central dim {}", central_dimension(&c)),
        format!("M_0..M_{degree}: {}", sequence.join(" ")),
        format!("f(x) = prod(x + k) / (x + 1)^{} with k = {:?}", rational.exponent, rational.roots),
    ];
    let mut result = json!({
        "cyclic_data": cyclic_json(&c),
        "central_dim": central_dimension(&c),
        "sequence": sequence,
        "rational": { "roots": rational.roots, "exponent": rational.exponent },
    });
    if !blocks.is_empty() {
        let model = hereditary_model(&c, blocks)?;
        lines.push(format!("hereditary valuations {:?} on blocks {:?}", model.valuations, model.block_sizes));
        result["hereditary_model"] = json!({
            "block_sizes": model.block_sizes,
            "valuations": model.valuations,
        });
    }
    Ok(Report::new("hilbert", &[text.as_bytes()], None, result, lines))
}

pub fn rep_check(
    setting: &Path,
    representation: &Path,
    superpotential: Option<&Path>,
    relations: Option<&Path>,
    opts: &Options,
) -> Outcome<Report> {
    let (text, s) = load_setting(setting)?;
    let (v_text, v) = load_representation(&s, representation)?;
    let (source, polys) = match (superpotential, relations) {
        (Some(p), None) => {
            let t = read(p)?;
            let w = with_file(p, parse_superpotential(&s.quiver, &t))?;
            let polys = vacualgebra_relations(&s.quiver, &w).into_iter().map(|r| r.polynomial).collect();
            (t, polys)
        }
        (None, Some(p)) => {
            let t = read(p)?;
            let polys = with_file(p, parse_relations(&s.quiver, &t))?;
            (t, polys)
        }
        _ => return Err(Failure::input("give exactly one of --superpotential and --relations")),
    };
    let residual = check_relations(&v, &polys)?;
    let exact = check_relations_exact(&v, &polys)?.to_string();
    let satisfied = residual <= opts.tol;
    let lines = vec![format!(
        "{} relations, residual {residual:.3e}, exact squared residual {exact}, satisfied={satisfied} (tol {:e})",
        polys.len(),
        opts.tol
    )];
    let result = json!({
        "relations": polys.len(),
        "residual": residual,
        "exact_squared_residual": exact,
        "tolerance": opts.tol,
        "satisfied": satisfied,
    });
    Ok(Report::new(
        "rep check",
        &[text.as_bytes(), v_text.as_bytes(), source.as_bytes()],
        None,
        result,
        lines,
    ))
}

fn stability_json(v: &StabilityVerdict) -> Value {
    json!({
        "holds": v.holds,
        "exact": v.exact,
        "witness": v.witness,
        "witness_pairing": v.witness_pairing.as_ref().map(ToString::to_string),
        "examined": v.examined,
    })
}

fn stability_line(name: &str, v: &StabilityVerdict) -> String {
    let mode = if v.exact { "exact" } else { "heuristic" };
    match (&v.witness, &v.witness_pairing) {
        (Some(b), Some(p)) => format!("{name}={} ({mode}), witness {b} with pairing {p}", v.holds),
        _ => format!("{name}={} ({mode})", v.holds),
    }
}

pub fn rep_stability(setting: &Path, representation: &Path, theta: &[i64], opts: &Options) -> Outcome<Report> {
    let (text, s) = load_setting(setting)?;
    let (v_text, v) = load_representation(&s, representation)?;
    let mu = StabilityParameter::from_integers(theta, &s)?;
    let (mode, seed) = if s.is_thin() {
        (StabilityMode::Exact, None)
    } else {
        let mode = StabilityMode::Heuristic {
            samples: opts.samples,
            seed: opts.seed,
        };
        (mode, Some(opts.seed))
    };
    let semistable = is_mu_semistable(&v, &mu, mode)?;
    let stable = is_mu_stable(&v, &mu, mode)?;
    let lines = vec![
        format!("theta={theta:?}"),
        stability_line("semistable", &semistable),
        stability_line("stable", &stable),
    ];
    let result = json!({
        "theta": theta,
        "semistable": stability_json(&semistable),
        "stable": stability_json(&stable),
    });
    Ok(Report::new("rep stability", &[text.as_bytes(), v_text.as_bytes()], seed, result, lines))
}

pub fn rep_moment_map(
    setting: &Path,
    representation: &Path,
    run_balance: bool,
    max_iter: usize,
    opts: &Options,
) -> Outcome<Report> {
    let (text, s) = load_setting(setting)?;
    let (v_text, v) = load_representation(&s, representation)?;
    let blocks = moment_map(&v);
    let norm = moment_map_norm(&v);
    let mut lines = vec![format!("|mu| = {norm:.6e}")];
    let mut result = json!({
        "blocks": blocks.iter().map(matrix_to_json).collect::<Vec<_>>(),
        "norm": norm,
    });
    if run_balance {
        let report = balance(&v, opts.tol, max_iter);
        let cycles = cycle_basis(&s.quiver, opts.max_len, &CycleLimits::default())?;
        let drift = cycles
            .iter()
            .map(|n| {
                let before = trace_invariant(&v, n);
                let after = trace_invariant(&report.representation, n);
                (after - before).norm() / before.norm().max(1.0)
            })
            .fold(0.0f64, f64::max);
        lines.push(format!(
            "balanced: |mu| = {:.6e} after {} iterations, converged={}, invariant drift {drift:.3e}",
            report.moment_norm, report.iterations, report.converged
        ));
        result["balance"] = json!({
            "norm": report.moment_norm,
            "iterations": report.iterations,
            "converged": report.converged,
            "tolerance": opts.tol,
            "invariant_drift": drift,
            "invariants_checked": cycles.len(),
            "representation": representation_to_json(&report.representation),
        });
    }
    Ok(Report::new("rep moment-map", &[text.as_bytes(), v_text.as_bytes()], None, result, lines))
}

pub fn rep_dim(path: &Path, opts: &Options) -> Outcome<Report> {
    let (text, s) = load_setting(path)?;
    let report = numeric_quotient_dimension(&s, opts.max_len, opts.samples, opts.seed, &CycleLimits::default())?;
    let verdict = classify_singularity(&s);
    let mut line = format!(
        "numerical dimension {} from {} invariants of length <= {} on {} samples",
        report.dimension, report.invariants, opts.max_len, opts.samples
    );
    if let Some(d) = verdict.central_dim {
        line.push_str(&format!("; central dimension {d}"));
    }
    let result = json!({
        "dimension": report.dimension,
        "invariants": report.invariants,
        "coordinates": report.coordinates,
        "ranks": report.ranks,
        "singular_values": report.singular_values,
        "max_len": opts.max_len,
        "central_dim": verdict.central_dim,
    });
    Ok(Report::new("rep dim", &[text.as_bytes()], Some(opts.seed), result, vec![line]))
}

/// Classifies every `*.json` file of a directory, in file-name order.
pub fn batch(dir: &Path, opts: &Options) -> Outcome<(Report, u8)> {
    let entries = fs::read_dir(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Failure::input(format!("{}: no .json files", dir.display())));
    }
    let outcomes: Vec<(String, Outcome<(String, Report)>)> = files
        .par_iter()
        .map(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let outcome = load_setting(p).map(|(text, s)| {
                let report = classify_report(&text, &s, opts);
                (text, report)
            });
            (name, outcome)
        })
        .collect();

    let mut code = 0u8;
    let mut inputs: Vec<Vec<u8>> = Vec::new();
    let mut reports = Vec::new();
    let mut summary = Vec::new();
    let mut lines = Vec::new();
    let width = outcomes.iter().map(|(n, _)| n.len()).max().unwrap_or(4).max(4);
    lines.push(format!("{:<width$}  {:<20}  {:<12}  {:>3}  status", "file", "kind", "cyclic", "dim"));
    for (name, outcome) in &outcomes {
        inputs.push(name.as_bytes().to_vec());
        match outcome {
            Ok((text, report)) => {
                inputs.push(text.as_bytes().to_vec());
                let verdict = &report.result["verdict"];
                let cyclic = verdict["cyclic_data"]["text"].as_str().unwrap_or("-").to_string();
                let dim = verdict["central_dim"].as_i64().map_or("-".to_string(), |d| d.to_string());
                let kind = verdict["kind"].as_str().unwrap_or("?").to_string();
                lines.push(format!("{name:<width$}  {kind:<20}  {cyclic:<12}  {dim:>3}  ok"));
                summary.push(json!({ "file": name, "kind": kind, "cyclic": cyclic, "central_dim": dim, "status": "ok" }));
                reports.push(json!({ "file": name, "report": report }));
            }
            Err(f) => {
                code = code.max(f.code);
                lines.push(format!("{name:<width$}  {:<20}  {:<12}  {:>3}  exit {}", "-", "-", "-", f.code));
                summary.push(json!({ "file": name, "status": "error", "exit_code": f.code, "message": f.message }));
                reports.push(json!({ "file": name, "error": f.message, "exit_code": f.code }));
            }
        }
    }
    if opts.trace {
        for (name, outcome) in &outcomes {
            if let Ok((_, report)) = outcome {
                lines.push(format!("## {name}"));
                lines.extend(report.text.iter().cloned());
            }
        }
    }
    let borrowed: Vec<&[u8]> = inputs.iter().map(Vec::as_slice).collect();
    let result = json!({ "reports": reports, "summary": summary });
    Ok((Report::new("batch", &borrowed, None, result, lines), code))
}
