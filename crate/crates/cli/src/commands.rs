//! Subcommand implementations.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use tweedie_boost::boost::{cv_tune, fit};
use tweedie_boost::eval::{gini_matrix, ordered_lorenz, summarize_gini};
use tweedie_boost::interpret::{adjusted_importance, partial_dependence, variable_importance};
use tweedie_boost::profile::{estimate_rho_phi, phi_given_rho};
use tweedie_boost::simgen::{gen_model1, gen_model2, gen_rfg, FIXED_DESIGN_PHI, FIXED_DESIGN_RHO};
use tweedie_boost::{BoostedModel, Dataset, GridSpec, ProfileConfig, RfgSpec, Simulated};

use crate::config::*;
use crate::error::{CliError, CliResult};
use crate::ingest::{ingest_csv, ingest_table, IngestOptions, Ingested, Table};
use crate::output::{csv_bytes, num, Outputs};

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".run.toml");
    PathBuf::from(s)
}

/// Prints the resolved options and stages them next to the main output.
fn echo_config(text: &str, out: &Path, outputs: &mut Outputs) -> CliResult<()> {
    print!("{text}");
    println!();
    outputs.stage(&sidecar(out), text.as_bytes())
}

fn load_model(path: &Option<PathBuf>) -> CliResult<BoostedModel> {
    let path = required(path, "model")?;
    BoostedModel::load(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

/// Reads data for an existing model: only the model's features are typed,
/// categorical columns follow the model and levels are matched by label.
fn ingest_for_model(path: &Path, model: &BoostedModel, input: Option<&InputArgs>, require_response: bool) -> CliResult<Ingested> {
    let table = Table::read(path)?;
    let schema = model.schema();
    let mut opts = match input {
        Some(i) => i.options(require_response),
        None => IngestOptions {
            response: Some("y".into()),
            ..IngestOptions::default()
        },
    };
    let roles = [&opts.response, &opts.weight, &opts.truth];
    opts.ignore = table
        .headers
        .iter()
        .filter(|h| schema.index_of(h).is_none() && !roles.iter().any(|r| r.as_deref() == Some(h.as_str())))
        .cloned()
        .collect();
    opts.categorical = schema
        .features
        .iter()
        .filter(|f| f.is_categorical() && table.headers.contains(&f.name))
        .map(|f| f.name.clone())
        .collect();
    let mut got = ingest_table(&table, &opts)?;
    got.data = got.data.align_to(schema)?;
    Ok(got)
}

pub fn fit_cmd(args: &FitArgs) -> CliResult<()> {
    let out = required(&args.out, "out")?;
    let mut outputs = Outputs::new();
    echo_config(&render("fit", args)?, out, &mut outputs)?;
    let data = ingest_csv(args.input.path()?, &args.input.options(true))?.data;
    let mut cfg = args.boost.config();
    if args.tune.unwrap_or(false) {
        let leaves = args.leaves_grid.clone().unwrap_or_default();
        let cv = cv_tune(&data, &cfg, &leaves)?;
        cfg.n_trees = cv.best_n_trees;
        cfg.n_leaves = cv.best_leaves;
        println!("tuned: trees = {}, leaves = {}", cv.best_n_trees, cv.best_leaves);
    }
    let mut model = fit(&data, &cfg)?;
    let f = model.predict(&data)?;
    let phi = phi_given_rho(&data, &f, cfg.rho)?;
    model.set_phi(phi.phi);
    println!(
        "fitted {} trees with {} leaves, rho = {}, phi = {}{}",
        model.n_trees(),
        model.n_leaves(),
        cfg.rho,
        phi.phi,
        if phi.at_boundary { " (at search boundary)" } else { "" }
    );
    println!("training loss = {}", model.loss_trace().last().copied().unwrap_or(f64::NAN));
    outputs.stage(out, model.to_json()?.as_bytes())?;
    if let Some(trace) = &args.trace {
        let rows = model.loss_trace().iter().enumerate().map(|(m, l)| vec![m.to_string(), num(*l)]);
        outputs.stage(trace, &csv_bytes(&header(&["stage", "loss"]), rows)?)?;
    }
    outputs.commit()?;
    Ok(())
}

pub fn predict_cmd(args: &PredictArgs) -> CliResult<()> {
    let out = required(&args.out, "out")?;
    let mut outputs = Outputs::new();
    echo_config(&render("predict", args)?, out, &mut outputs)?;
    let model = load_model(&args.model)?;
    let data = ingest_for_model(required(&args.data, "data")?, &model, None, false)?.data;
    let f = model.predict(&data)?;
    let rows = f.iter().enumerate().map(|(i, v)| vec![i.to_string(), num(*v), num(v.exp())]);
    outputs.stage(out, &csv_bytes(&header(&["row", "f", "mu"]), rows)?)?;
    outputs.commit()?;
    println!("scored {} rows", f.len());
    Ok(())
}

pub fn tune_cmd(args: &TuneArgs) -> CliResult<()> {
    let out = required(&args.out, "out")?;
    let mut outputs = Outputs::new();
    echo_config(&render("tune", args)?, out, &mut outputs)?;
    let data = ingest_csv(args.input.path()?, &args.input.options(true))?.data;
    let leaves = args.leaves_grid.clone().unwrap_or_default();
    let cv = cv_tune(&data, &args.boost.config(), &leaves)?;
    for (l, &size) in cv.leaves.iter().enumerate() {
        println!("leaves = {size}: best trees = {}, cv loss = {}", cv.best_trees[l], cv.min_loss(l));
    }
    println!("selected: trees = {}, leaves = {}", cv.best_n_trees, cv.best_leaves);
    let rows = cv.leaves.iter().zip(&cv.loss).flat_map(|(size, losses)| {
        losses.iter().enumerate().map(move |(m, v)| vec![size.to_string(), m.to_string(), num(*v)])
    });
    outputs.stage(out, &csv_bytes(&header(&["leaves", "trees", "cv_loss"]), rows)?)?;
    outputs.commit()?;
    Ok(())
}

pub fn profile_cmd(args: &ProfileArgs) -> CliResult<()> {
    let out = required(&args.out, "out")?;
    let mut outputs = Outputs::new();
    echo_config(&render("profile", args)?, out, &mut outputs)?;
    let data = ingest_csv(args.input.path()?, &args.input.options(true))?.data;
    let cfg = ProfileConfig {
        boost: args.boost.config(),
        grid_points: args.grid_points.unwrap_or(50),
        rho_min: args.rho_min.unwrap_or(1.01),
        rho_max: args.rho_max.unwrap_or(1.99),
        tuning: args.tuning()?,
    };
    let (res, model) = estimate_rho_phi(&data, &cfg)?;
    println!("{:>8} {:>14} {:>16} {:>6} {:>6}", "rho", "phi", "loglik", "trees", "leaves");
    let mut rows = Vec::new();
    for k in 0..res.rho_grid.len() {
        let mark = if k == res.best_index { " *" } else { "" };
        let edge = if res.phi_at_boundary[k] { " (phi at boundary)" } else { "" };
        println!(
            "{:>8.4} {:>14.6} {:>16.6} {:>6} {:>6}{mark}{edge}",
            res.rho_grid[k], res.phi_star[k], res.loglik[k], res.n_trees[k], res.n_leaves[k]
        );
        rows.push(vec![
            num(res.rho_grid[k]),
            num(res.phi_star[k]),
            num(res.loglik[k]),
            res.phi_at_boundary[k].to_string(),
            res.n_trees[k].to_string(),
            res.n_leaves[k].to_string(),
        ]);
    }
    for failure in &res.failures {
        eprintln!("warning: rho = {} skipped: {}", failure.rho, failure.message);
    }
    println!("rho* = {}, phi* = {}", res.rho_star, res.phi_star_final);
    outputs.stage(out, &csv_bytes(&header(&["rho", "phi", "loglik", "boundary", "trees", "leaves"]), rows)?)?;
    if let Some(path) = &args.model_out {
        outputs.stage(path, model.to_json()?.as_bytes())?;
    }
    outputs.commit()?;
    Ok(())
}

pub fn importance_cmd(args: &ImportanceArgs) -> CliResult<()> {
    let out = required(&args.out, "out")?;
    let mut outputs = Outputs::new();
    echo_config(&render("importance", args)?, out, &mut outputs)?;
    let model = load_model(&args.model)?;
    let report = if args.adjusted.unwrap_or(false) {
        let data = ingest_for_model(args.input.path()?, &model, Some(&args.input), true)?.data;
        let seed = args.seed.unwrap_or(model.seed());
        adjusted_importance(&data, &model.config(), args.reps.unwrap_or(10), seed, args.baseline()?)?
    } else {
        variable_importance(&model)
    };
    let opt = |v: &Option<Vec<f64>>, j: usize| v.as_ref().map_or(String::new(), |v| num(v[j]));
    let mut rows = Vec::new();
    for (j, name) in report.features.iter().enumerate() {
        let flag = report.important.as_ref().map_or(String::new(), |v| v[j].to_string());
        println!("{name:>16} raw = {:<14.6e} {}", report.raw[j], if flag == "true" { "important" } else { "" });
        rows.push(vec![name.clone(), num(report.raw[j]), opt(&report.augmented, j), opt(&report.baseline, j), flag]);
    }
    outputs.stage(out, &csv_bytes(&header(&["feature", "raw", "augmented", "baseline", "important"]), rows)?)?;
    outputs.commit()?;
    Ok(())
}

pub fn pdp_cmd(args: &PdpArgs) -> CliResult<()> {
    let out = required(&args.out, "out")?;
    let mut outputs = Outputs::new();
    echo_config(&render("pdp", args)?, out, &mut outputs)?;
    let model = load_model(&args.model)?;
    let data = ingest_for_model(args.input.path()?, &model, Some(&args.input), false)?.data;
    let features = required(&args.features, "features")?;
    let names: Vec<&str> = features.iter().map(String::as_str).collect();
    let spec = GridSpec {
        points: args.points.unwrap_or(100),
        lower_quantile: args.lower_quantile.unwrap_or(0.01),
        upper_quantile: args.upper_quantile.unwrap_or(0.99),
    };
    let grid = partial_dependence(&model, &data, &names, &spec)?;
    let rows = grid.values.iter().enumerate().map(|(k, v)| {
        let mut row: Vec<String> = grid.point(k).iter().enumerate().map(|(a, x)| grid.label(a, *x)).collect();
        row.push(num(*v));
        row
    });
    let mut head = grid.features.clone();
    head.push("pd".into());
    outputs.stage(out, &csv_bytes(&head, rows)?)?;
    outputs.commit()?;
    println!("{} grid points", grid.values.len());
    Ok(())
}

fn numeric(table: &Table, name: &str, rows: &[usize]) -> CliResult<Vec<f64>> {
    let all = table.numeric_column(table.index(name)?)?;
    Ok(rows.iter().map(|&i| all[i]).collect())
}

pub fn lorenz_cmd(args: &LorenzArgs) -> CliResult<()> {
    let out = required(&args.out, "out")?;
    let mut outputs = Outputs::new();
    echo_config(&render("lorenz", args)?, out, &mut outputs)?;
    let table = Table::read(required(&args.data, "data")?)?;
    let scores = required(&args.scores, "scores")?;
    if scores.len() < 2 {
        return Err(CliError::config("--scores needs at least two columns"));
    }
    let loss_col = args.losses.as_deref().unwrap_or("y");
    let mut groups: Vec<Vec<usize>> = Vec::new();
    match &args.replicate {
        Some(col) => {
            let c = table.index(col)?;
            let mut index: HashMap<String, usize> = HashMap::new();
            for r in 0..table.rows.len() {
                let key = table.cell(r, c)?.to_string();
                let g = *index.entry(key).or_insert_with(|| {
                    groups.push(Vec::new());
                    groups.len() - 1
                });
                groups[g].push(r);
            }
        }
        None => groups.push((0..table.rows.len()).collect()),
    }
    let mut runs = Vec::with_capacity(groups.len());
    for rows in &groups {
        let losses = numeric(&table, loss_col, rows)?;
        let s: Vec<Vec<f64>> = scores.iter().map(|n| numeric(&table, n, rows)).collect::<CliResult<_>>()?;
        runs.push(gini_matrix(&s, &losses)?);
    }
    let summary = summarize_gini(&runs)?;
    let k = scores.len();
    println!("Gini x 100 (rows: base premium, columns: competing), {} replication(s)", summary.replications);
    print!("{:>16}", "");
    for name in scores {
        print!(" {name:>16}");
    }
    println!(" {:>10}", "max");
    let mut rows = Vec::new();
    for b in 0..k {
        print!("{:>16}", scores[b]);
        for p in 0..k {
            let cell = if b == p {
                "-".to_string()
            } else if summary.replications > 1 {
                format!("{:.2} ({:.2})", 100.0 * summary.mean[b][p], 100.0 * summary.se[b][p])
            } else {
                format!("{:.2}", 100.0 * summary.mean[b][p])
            };
            print!(" {cell:>16}");
            if b != p {
                rows.push(vec![scores[b].clone(), scores[p].clone(), num(summary.mean[b][p]), num(summary.se[b][p])]);
            }
        }
        println!(" {:>10.2}", 100.0 * summary.max_per_base[b]);
    }
    println!("minimax choice: {}", scores[summary.selected]);
    outputs.stage(out, &csv_bytes(&header(&["base", "competing", "gini", "se"]), rows)?)?;
    match (&args.curve, &args.curve_out) {
        (Some(pair), Some(path)) => {
            if pair.len() != 2 {
                return Err(CliError::config("--curve takes a base and a competing column"));
            }
            let all: Vec<usize> = (0..table.rows.len()).collect();
            let curve = ordered_lorenz(
                &numeric(&table, &pair[0], &all)?,
                &numeric(&table, &pair[1], &all)?,
                &numeric(&table, loss_col, &all)?,
            )?;
            let rows = (0..curve.premium.len()).map(|v| {
                let rel = if v == 0 { String::new() } else { num(curve.relative[v - 1]) };
                vec![rel, num(curve.premium[v]), num(curve.loss[v])]
            });
            outputs.stage(path, &csv_bytes(&header(&["relative", "premium", "loss"]), rows)?)?;
            println!("curve gini = {:.2}", 100.0 * curve.gini);
        }
        (None, None) => {}
        _ => return Err(CliError::config("--curve and --curve-out go together")),
    }
    outputs.commit()?;
    Ok(())
}

fn simulated_csv(sim: &Simulated) -> CliResult<Vec<u8>> {
    let data: &Dataset = &sim.data;
    let mut head: Vec<String> = data.schema().features.iter().map(|f| f.name.clone()).collect();
    head.push("y".into());
    head.push("true_f".into());
    let rows = (0..data.n_rows()).map(|i| {
        let mut row: Vec<String> = (0..data.n_features()).map(|j| num(data.value(i, j))).collect();
        row.push(num(data.y()[i]));
        row.push(num(sim.true_f[i]));
        row
    });
    csv_bytes(&head, rows)
}

pub fn simulate_cmd(args: &SimulateArgs) -> CliResult<()> {
    let out = required(&args.out, "out")?;
    let mut outputs = Outputs::new();
    echo_config(&render("simulate", args)?, out, &mut outputs)?;
    let n = args.n.unwrap_or(2000);
    let test_n = args.test_n.unwrap_or(0);
    let seed = args.seed.unwrap_or(0);
    let test_seed = args.test_seed.unwrap_or(seed.wrapping_add(1));
    let (phi, rho) = (args.phi.unwrap_or(1.0), args.rho.unwrap_or(1.5));
    let design = args.design.as_deref().unwrap_or("rfg");
    if matches!(design, "model1" | "model2") && (phi != FIXED_DESIGN_PHI || rho != FIXED_DESIGN_RHO) {
        return Err(CliError::config(format!(
            "{design} uses phi = {FIXED_DESIGN_PHI} and rho = {FIXED_DESIGN_RHO}"
        )));
    }
    let (train, test) = match design {
        "model1" => (gen_model1(n, seed)?, (test_n > 0).then(|| gen_model1(test_n, test_seed)).transpose()?),
        "model2" => (gen_model2(n, seed)?, (test_n > 0).then(|| gen_model2(test_n, test_seed)).transpose()?),
        "rfg" => {
            let spec = RfgSpec {
                p: args.p.unwrap_or(10),
                n_terms: args.terms.unwrap_or(20),
                phi,
                rho,
                seed,
            };
            let (func, train) = gen_rfg(n, &spec)?;
            let test = (test_n > 0).then(|| func.sample_seeded(test_n, phi, rho, test_seed)).transpose()?;
            (train, test)
        }
        other => return Err(CliError::config(format!("design must be model1, model2 or rfg, got {other:?}"))),
    };
    outputs.stage(out, &simulated_csv(&train)?)?;
    match (&test, &args.test_out) {
        (Some(test), Some(path)) => outputs.stage(path, &simulated_csv(test)?)?,
        (Some(_), None) => return Err(CliError::config("--test-n needs --test-out")),
        _ => {}
    }
    outputs.commit()?;
    let zeros = train.data.y().iter().filter(|&&y| y == 0.0).count();
    println!("{n} rows, {:.1}% zero responses", 100.0 * zeros as f64 / n.max(1) as f64);
    Ok(())
}
