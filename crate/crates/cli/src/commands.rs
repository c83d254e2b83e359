//! The experiment subcommands.


use weldedtrees::classical::{
    RateEstimate, estimate_extremity_reach, estimate_game3, estimate_improperness,
    estimate_middle_intersection, run_flooding_baseline,
};
use weldedtrees::classical::column_uniformity;
use weldedtrees::distsim::{RunOutcome, TraversalConfig, run_traversal};
use weldedtrees::graph::build_instance;
use weldedtrees::report::{CsvDocument, fmt_f64};
use weldedtrees::rng::SplitRng;
use weldedtrees::runner::run_trials;
use weldedtrees::walk::{step_range, sweep_t};

use crate::config::{Effective, Experiment};

type CmdResult = Result<(), String>;

fn emit(cfg: &Effective, doc: &CsvDocument) -> CmdResult {
    match &cfg.out {
        Some(path) => doc
            .write_to(path)
            .map_err(|e| format!("writing {}: {e}", path.display())),
        None => {
            print!("{}", doc.render());
            Ok(())
        }
    }
}

fn traversal_config(cfg: &Effective) -> TraversalConfig {
    TraversalConfig {
        epsilon: cfg.epsilon,
        payload_bits: cfg.b,
        range_log: cfg.log_base_range,
        eps_log: cfg.log_base_eps,
        backend: cfg.backend,
    }
}

pub fn gen_graph(cfg: &Effective) -> CmdResult {
    let n = *cfg.n_list.first().ok_or("usage: empty height range")?;
    let inst = build_instance(n, cfg.seed).map_err(|e| format!("usage: {e}"))?;
    let stats = format!(
        "n={} vertices={} edges={}",
        inst.n(),
        inst.num_vertices(),
        inst.num_edges()
    );
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, inst.serialize())
                .map_err(|e| format!("writing {}: {e}", path.display()))?;
            println!("{stats}");
        }
        None => {
            print!("{}", inst.serialize());
            eprintln!("{stats}");
        }
    }
    Ok(())
}

pub fn walk_sweep(cfg: &Effective) -> CmdResult {
    let mut doc = CsvDocument::new(&["n", "seed", "T", "p"]);
    cfg.echo_into("walk-sweep", &mut doc);
    let root = SplitRng::seeded(cfg.seed);
    for &n in &cfg.n_list {
        let (lo, hi) = step_range(n, cfg.log_base_range);
        if hi < lo {
            continue;
        }
        for trial in 0..cfg.trials {
            let instance_seed = root.split(n as u64).split(trial).seed();
            let inst = build_instance(n, instance_seed).map_err(|e| e.to_string())?;
            let sweep = sweep_t(&inst, lo, hi);
            for &(t, p) in &sweep.entries {
                doc.push_row(vec![
                    n.to_string(),
                    instance_seed.to_string(),
                    t.to_string(),
                    fmt_f64(p),
                ]);
            }
            doc.push_footer(format!(
                "crossing n={n} seed={instance_seed} threshold={} t_hat={} argmax={}",
                fmt_f64(sweep.threshold),
                sweep
                    .t_hat
                    .map_or_else(|| "none".to_string(), |t| t.to_string()),
                sweep
                    .argmax
                    .map_or_else(|| "none".to_string(), |t| t.to_string()),
            ));
        }
    }
    emit(cfg, &doc)
}

pub fn traversal(cfg: &Effective) -> CmdResult {
    let mut doc = CsvDocument::new(&[
        "n", "seed", "b", "epsilon", "T_or_range", "calls", "qubits", "success",
    ]);
    cfg.echo_into("traversal", &mut doc);
    let tcfg = traversal_config(cfg);
    let root = SplitRng::seeded(cfg.seed);
    for &n in &cfg.n_list {
        let (lo, hi) = step_range(n, cfg.log_base_range);
        let range_label = format!("{lo}..{hi}");
        let outcomes: Vec<(u64, RunOutcome)> =
            run_trials(cfg.trials, cfg.threads, |trial| {
                let mut rng = root.split(n as u64).split(trial);
                let run_seed = rng.seed();
                let instance_seed = rng.draw_u64();
                let inst = build_instance(n, instance_seed).expect("validated height");
                (run_seed, run_traversal(&inst, &tcfg, &mut rng))
            });
        for (run_seed, out) in outcomes {
            doc.push_row(vec![
                n.to_string(),
                run_seed.to_string(),
                cfg.b.to_string(),
                fmt_f64(cfg.epsilon),
                range_label.clone(),
                out.calls.to_string(),
                out.total_cost.to_string(),
                (out.success as u8).to_string(),
            ]);
        }
    }
    emit(cfg, &doc)
}

pub fn flood(cfg: &Effective) -> CmdResult {
    let mut doc = CsvDocument::new(&["n", "b", "bits"]);
    cfg.echo_into("flood", &mut doc);
    let root = SplitRng::seeded(cfg.seed);
    for &n in &cfg.n_list {
        let inst =
            build_instance(n, root.split(n as u64).seed()).map_err(|e| e.to_string())?;
        let (bits, success) = run_flooding_baseline(&inst, cfg.b);
        debug_assert!(success);
        doc.push_row(vec![n.to_string(), cfg.b.to_string(), bits.to_string()]);
    }
    emit(cfg, &doc)
}

pub fn lower_bound(cfg: &Effective) -> CmdResult {
    let mut doc = CsvDocument::new(&["n", "t", "strategy", "trials", "wins", "rate", "stderr"]);
    cfg.echo_into("lower-bound", &mut doc);
    if cfg.trials == 0 {
        return emit(cfg, &doc);
    }
    let root = SplitRng::seeded(cfg.seed);
    for &n in &cfg.n_list {
        let rng = root.split(n as u64);
        let est: RateEstimate = match cfg.experiment {
            Experiment::Game3 => {
                estimate_game3(n, cfg.t, cfg.strategy, cfg.trials, cfg.threads, &rng)
                    .map_err(|e| e.to_string())?
            }
            Experiment::Middle => estimate_middle_intersection(
                n,
                cfg.t,
                cfg.strategy,
                cfg.trials,
                cfg.threads,
                &rng,
            )
            .map_err(|e| e.to_string())?,
            Experiment::Improper => {
                estimate_improperness(n, cfg.t, cfg.strategy, cfg.trials, cfg.threads, &rng)
                    .map_err(|e| e.to_string())?
            }
            Experiment::Extremity => {
                estimate_extremity_reach(n, cfg.t, cfg.trials, cfg.threads, &rng)
            }
        };
        doc.push_row(vec![
            n.to_string(),
            cfg.t.to_string(),
            cfg.strategy.name().to_string(),
            est.trials.to_string(),
            est.wins.to_string(),
            fmt_f64(est.rate),
            fmt_f64(est.stderr),
        ]);
    }
    emit(cfg, &doc)
}

pub fn uniformity(cfg: &Effective) -> CmdResult {
    let mut doc = CsvDocument::new(&["n", "tree", "node", "k", "chi2", "dof", "pvalue"]);
    cfg.echo_into("uniformity", &mut doc);
    let tree = cfg.strategy.build(cfg.t, 3);
    let tree_label = format!("{}-{}", cfg.strategy.name(), cfg.t);
    let node = cfg.t as u32;
    let root = SplitRng::seeded(cfg.seed);
    for &n in &cfg.n_list {
        let results = column_uniformity(
            n,
            &tree,
            node,
            cfg.trials,
            cfg.threads,
            &root.split(n as u64),
            5.0,
        );
        for r in results {
            doc.push_row(vec![
                n.to_string(),
                tree_label.clone(),
                node.to_string(),
                r.column.to_string(),
                fmt_f64(r.chi2),
                r.dof.to_string(),
                fmt_f64(r.p_value),
            ]);
        }
    }
    emit(cfg, &doc)
}

pub fn gap_table(cfg: &Effective) -> CmdResult {
    let mut doc = CsvDocument::new(&["n", "quantum_mean_qubits", "flood_bits", "game3_rate"]);
    cfg.echo_into("gap-table", &mut doc);
    if cfg.trials == 0 {
        return emit(cfg, &doc);
    }
    let tcfg = traversal_config(cfg);
    let root = SplitRng::seeded(cfg.seed);
    for &n in &cfg.n_list {
        let quantum_root = root.split(n as u64).split(0);
        let outcomes = run_trials(cfg.trials, cfg.threads, |trial| {
            let mut rng = quantum_root.split(trial);
            let instance_seed = rng.draw_u64();
            let inst = build_instance(n, instance_seed).expect("validated height");
            run_traversal(&inst, &tcfg, &mut rng).total_cost
        });
        let quantum_mean = if outcomes.is_empty() {
            0.0
        } else {
            outcomes.iter().sum::<u64>() as f64 / outcomes.len() as f64
        };
        let inst =
            build_instance(n, root.split(n as u64).split(1).seed()).map_err(|e| e.to_string())?;
        let (flood_bits, _) = run_flooding_baseline(&inst, cfg.b);
        let game3 = estimate_game3(
            n,
            cfg.t,
            cfg.strategy,
            cfg.trials,
            cfg.threads,
            &root.split(n as u64).split(2),
        )
        .map_err(|e| e.to_string())?;
        doc.push_row(vec![
            n.to_string(),
            fmt_f64(quantum_mean),
            flood_bits.to_string(),
            fmt_f64(game3.rate),
        ]);
    }
    emit(cfg, &doc)
}
