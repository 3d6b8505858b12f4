use std::path::{Path, PathBuf};

use grex::datasets::{
    gen_ba_shapes, gen_ring_dataset, load_dataset_dir, save_dataset_dir, LabeledDataset,
};
use grex::eval::{run_benchmark, BenchEntry, BenchmarkConfig, Metric};
use grex::exec::Exec;
use grex::explain::{
    explain, Explanation, LimeConfig, LimeFeatures, Method, MethodConfig, Perturbation, Scope,
};
use grex::graph::Graph;
use grex::models::{
    stratified_split, task_labels, train, Checkpoint, ModelSpec, Target, Task, TrainConfig,
};
use serde_json::json;

use crate::dot;
use crate::error::CliError;
use crate::settings::Settings;
use crate::{Cli, Command, Evaluate, Explain, ExportDot, GenData, LimeFlags, Train};

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> Result<()> {
    let mut s = Settings::load(cli.config.as_deref())?;
    let jobs = s.get("jobs", cli.jobs, || {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    })?;
    let exec = Exec::with_jobs(jobs).map_err(|e| CliError::usage(e.to_string()))?;
    match cli.command {
        Command::GenData(a) => gen_data(a, s),
        Command::Train(a) => train_cmd(a, s),
        Command::Explain(a) => explain_cmd(a, s, &exec),
        Command::Evaluate(a) => evaluate(a, s, &exec),
        Command::ExportDot(a) => export_dot(a, s),
    }
}

/// Rejects stray config keys, creates the output directory and echoes the
/// effective settings into it.
fn prepare_out(s: &Settings, command: &str, out: &str) -> Result<PathBuf> {
    s.check_unknown()?;
    let dir = PathBuf::from(out);
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::new("E-IO", format!("{}: {e}", dir.display())))?;
    write(&dir.join(format!("{command}.config")), &s.render(command))?;
    Ok(dir)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| CliError::new("E-IO", format!("{}: {e}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn gen_data(a: GenData, mut s: Settings) -> Result<()> {
    let dataset: String = s.require("dataset", a.dataset)?;
    let seed = s.seed(a.seed)?;
    let out: String = s.require("out", a.out)?;
    let data = match dataset.as_str() {
        "ba-shapes" => {
            if s.opt("num_graphs", a.num_graphs)?.is_some() {
                return Err(CliError::usage(
                    "--num-graphs applies only to --dataset rings",
                ));
            }
            gen_ba_shapes(seed)
        }
        "rings" => gen_ring_dataset(s.get("num_graphs", a.num_graphs, || 400)?, seed)?,
        other => {
            return Err(CliError::usage(format!(
                "unknown dataset {other:?} (expected ba-shapes or rings)"
            )))
        }
    };
    let dir = prepare_out(&s, "gen-data", &out)?;
    save_dataset_dir(&data, &dir)?;
    let nodes: usize = data.graphs.iter().map(Graph::num_nodes).sum();
    eprintln!(
        "wrote {} ({} graphs, {nodes} nodes)",
        dir.join("dataset.json").display(),
        data.graphs.len()
    );
    Ok(())
}

fn load_data(path: &str) -> Result<LabeledDataset> {
    Ok(load_dataset_dir(Path::new(path))?)
}

fn train_cmd(a: Train, mut s: Settings) -> Result<()> {
    let data_dir: String = s.require("data", a.data)?;
    let arch: String = s.require("model", a.model)?;
    let seed = s.seed(a.seed)?;
    let out: String = s.require("out", a.out)?;
    let hidden: Option<Vec<usize>> = s.list("hidden", &a.hidden)?;
    let spec = match arch.as_str() {
        "gcn" => {
            if s.opt("steps", a.steps)?.is_some() {
                return Err(CliError::usage("--steps applies only to --model ggnn"));
            }
            let hidden = hidden.unwrap_or_else(|| vec![32]);
            if hidden.contains(&0) {
                return Err(CliError::usage("hidden widths must be positive"));
            }
            ModelSpec::Gcn { hidden }
        }
        "ggnn" => {
            let hidden = match hidden.as_deref() {
                None => 16,
                Some(&[h]) if h > 0 => h,
                Some(_) => {
                    return Err(CliError::usage(
                        "--hidden for ggnn takes one positive width",
                    ))
                }
            };
            let steps = s.get("steps", a.steps, || 4)?;
            ModelSpec::Ggnn { hidden, steps }
        }
        other => {
            return Err(CliError::usage(format!(
                "unknown model {other:?} (expected gcn or ggnn)"
            )))
        }
    };
    let defaults = TrainConfig::for_spec(&spec);
    let cfg = TrainConfig {
        epochs: s.get("epochs", a.epochs, || defaults.epochs)?,
        lr: s.get("lr", a.lr, || defaults.lr)?,
        test_fraction: s.get("test_fraction", a.test_fraction, || defaults.test_fraction)?,
        seed,
    };
    if !(cfg.lr > 0.0 && cfg.lr.is_finite()) {
        return Err(CliError::usage(format!(
            "--lr must be positive, got {}",
            cfg.lr
        )));
    }
    let data = load_data(&data_dir)?;
    let dir = prepare_out(&s, "train", &out)?;
    let (model, metrics) = train(&spec, &data, &cfg)?;
    Checkpoint::from_model(&model, seed, &data.name, cfg.test_fraction)
        .save(&dir.join("model.ckpt.json"))?;
    eprintln!("wrote {}", dir.join("model.ckpt.json").display());
    let report = json!({
        "model": spec,
        "dataset": data.name,
        "epochs": cfg.epochs,
        "lr": cfg.lr,
        "seed": seed,
        "test_fraction": cfg.test_fraction,
        "train_accuracy": metrics.train_accuracy,
        "test_accuracy": metrics.test_accuracy,
        "loss_curve": metrics.loss_curve,
        "train_indices": metrics.train_indices,
        "test_indices": metrics.test_indices,
    });
    write(
        &dir.join("metrics.json"),
        &serde_json::to_string_pretty(&report).expect("serializable"),
    )?;
    println!(
        "train_accuracy={:.4} test_accuracy={:.4}",
        metrics.train_accuracy, metrics.test_accuracy
    );
    Ok(())
}

fn parse_scope(s: &mut Settings, flag: Option<String>) -> Result<Scope> {
    match s.get("scope", flag, || "receptive".to_string())?.as_str() {
        "receptive" => Ok(Scope::Receptive),
        "full" => Ok(Scope::Full),
        other => Err(CliError::usage(format!(
            "unknown scope {other:?} (expected receptive or full)"
        ))),
    }
}

/// LIME settings from flags, plus whether any was given explicitly.
fn lime_config(s: &mut Settings, f: LimeFlags, seed: u64) -> Result<(LimeConfig, bool)> {
    let d = LimeConfig::default();
    let m = s.opt("m", f.m)?;
    let p = s.opt("p", f.p)?;
    let sigma = s.opt("sigma", f.sigma)?;
    let lambda = s.opt("lambda", f.lambda)?;
    let perturbation = match s.opt::<String>("perturbation", f.perturbation)?.as_deref() {
        None => None,
        Some("uniform") => Some(Perturbation::Uniform),
        Some("zero") => Some(Perturbation::Zero),
        Some(other) => {
            return Err(CliError::usage(format!(
                "unknown perturbation {other:?} (expected uniform or zero)"
            )))
        }
    };
    let features = match s.opt::<String>("features", f.features)?.as_deref() {
        None => None,
        Some("weight") => Some(LimeFeatures::Weight),
        Some("binary") => Some(LimeFeatures::Binary),
        Some(other) => {
            return Err(CliError::usage(format!(
                "unknown feature mode {other:?} (expected weight or binary)"
            )))
        }
    };
    let given = m.is_some()
        || p.is_some()
        || sigma.is_some()
        || lambda.is_some()
        || perturbation.is_some()
        || features.is_some();
    let cfg = LimeConfig {
        p: p.unwrap_or(d.p),
        m: m.or(d.m),
        sigma: sigma.or(d.sigma),
        lambda: lambda.unwrap_or(d.lambda),
        seed,
        perturbation: perturbation.unwrap_or(d.perturbation),
        features: features.unwrap_or(d.features),
    };
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok((cfg, given))
}

fn load_checkpoint(path: &str, data: &LabeledDataset) -> Result<(Checkpoint, grex::models::Model)> {
    let ckpt = Checkpoint::load(Path::new(path))?;
    let model = ckpt.to_model()?;
    if model.task() != data.task {
        return Err(grex::Error::TaskMismatch(format!(
            "checkpoint {path} holds a {} model ({}) but dataset {} is {}",
            model.architecture(),
            model.task(),
            data.name,
            data.task
        ))
        .into());
    }
    Ok((ckpt, model))
}

fn explain_cmd(a: Explain, mut s: Settings, exec: &Exec) -> Result<()> {
    let ckpt_path: String = s.require("checkpoint", a.checkpoint)?;
    let data_dir: String = s.require("data", a.data)?;
    let method: Method = s
        .require::<String>("method", a.method)?
        .parse()
        .map_err(|e: grex::Error| CliError::usage(e.to_string()))?;
    let target_id: usize = s.require("target", a.target)?;
    let class = s.opt("class", a.class)?;
    let scope = parse_scope(&mut s, a.scope)?;
    let seed = s.seed(a.seed)?;
    let out: String = s.require("out", a.out)?;
    let (lime, lime_given) = lime_config(&mut s, a.lime, seed)?;
    if lime_given && method != Method::Lime {
        return Err(CliError::usage("LIME options apply only to --method lime"));
    }
    let data = load_data(&data_dir)?;
    let (_, model) = load_checkpoint(&ckpt_path, &data)?;
    let (g, mut target) = match data.task {
        Task::NodeClassification => (&data.graphs[0], Target::node(target_id)),
        Task::GraphClassification => {
            let g = data.graphs.get(target_id).ok_or_else(|| {
                CliError::new(
                    "E-RANGE",
                    format!(
                        "target graph {target_id} out of range ({} graphs)",
                        data.graphs.len()
                    ),
                )
            })?;
            (g, Target::graph())
        }
    };
    if let Some(c) = class {
        target = target.with_class(c);
    }
    let cfg = match method {
        Method::Lime => MethodConfig::Lime(lime),
        other => MethodConfig::default_for(other, seed),
    };
    let dir = prepare_out(&s, "explain", &out)?;
    let mut explanation = explain(&model, g, target, &cfg, scope, exec)?;
    explanation.dataset = data.name.clone();
    explanation.save_json(&dir.join("explanation.json"))?;
    eprintln!("wrote {}", dir.join("explanation.json").display());
    let mut csv = Vec::new();
    explanation.write_csv(g, &mut csv)?;
    write(
        &dir.join("explanation.csv"),
        &String::from_utf8(csv).expect("ascii"),
    )?;
    let top: Vec<String> = explanation
        .top_k(5)
        .iter()
        .map(ToString::to_string)
        .collect();
    println!(
        "method={} forward_passes={} top_edges={}",
        method,
        explanation.forward_passes,
        top.join(",")
    );
    Ok(())
}

fn evaluate(a: Evaluate, mut s: Settings, exec: &Exec) -> Result<()> {
    let checkpoints: Vec<String> = s.list("checkpoint", &a.checkpoint)?.unwrap_or_default();
    let data_dirs: Vec<String> = s.list("data", &a.data)?.unwrap_or_default();
    if checkpoints.is_empty() || data_dirs.is_empty() {
        return Err(CliError::usage(
            "evaluate needs at least one --checkpoint and --data",
        ));
    }
    if checkpoints.len() != data_dirs.len() {
        return Err(CliError::usage(format!(
            "{} checkpoints but {} datasets; pass them in pairs",
            checkpoints.len(),
            data_dirs.len()
        )));
    }
    let methods: Vec<Method> = match s.list::<String>("methods", &a.methods)? {
        None => Method::ALL.to_vec(),
        Some(names) if names.is_empty() => {
            return Err(CliError::usage("--methods lists no method"))
        }
        Some(names) => names
            .iter()
            .map(|n| n.parse())
            .collect::<std::result::Result<_, grex::Error>>()
            .map_err(|e| CliError::usage(e.to_string()))?,
    };
    let metric: Metric = s
        .get("metric", a.metric, || "recall".to_string())?
        .parse()
        .map_err(|e: grex::Error| CliError::usage(e.to_string()))?;
    let k = s.get("k", a.k, || 5)?;
    let seed = s.seed(a.seed)?;
    let seeds = match s.list::<u64>("seeds", &a.seeds)? {
        None => vec![seed],
        Some(v) if v.is_empty() => return Err(CliError::usage("--seeds lists no seed")),
        Some(v) => v,
    };
    let max_targets = s.opt("max_targets", a.max_targets)?;
    let scope = parse_scope(&mut s, a.scope)?;
    let wall_time = s.get("wall_time", a.wall_time.then_some(true), || false)?;
    let (lime, _) = lime_config(&mut s, a.lime, seed)?;
    let out: String = s.require("out", a.out)?;

    let mut loaded = Vec::new();
    for (c, d) in checkpoints.iter().zip(&data_dirs) {
        let data = load_data(d)?;
        let (ckpt, model) = load_checkpoint(c, &data)?;
        let test = match data.task {
            Task::GraphClassification if ckpt.dataset == data.name => {
                Some(stratified_split(&task_labels(&data)?, ckpt.test_fraction, ckpt.seed)?.1)
            }
            _ => None,
        };
        loaded.push((model, data, test));
    }
    let entries: Vec<BenchEntry<'_>> = loaded
        .iter()
        .map(|(model, data, test)| BenchEntry {
            model,
            data,
            test_indices: test.as_deref(),
        })
        .collect();
    let cfg = BenchmarkConfig {
        methods,
        metric,
        k,
        seeds,
        max_targets,
        scope,
        lime,
        wall_time,
    };
    let dir = prepare_out(&s, "evaluate", &out)?;
    let report = run_benchmark(&entries, &cfg, exec)?;
    write(&dir.join("report.csv"), &report.to_csv())?;
    write(&dir.join("targets.csv"), &report.details_csv())?;
    print!("{}", report.summary_table());
    Ok(())
}

fn export_dot(a: ExportDot, mut s: Settings) -> Result<()> {
    let exp_path: String = s.require("explanation", a.explanation)?;
    let data_dir: String = s.require("data", a.data)?;
    let out: String = s.require("out", a.out)?;
    let top_k = s.opt("top_k", a.top_k)?;
    let explanation = Explanation::load_json(Path::new(&exp_path))?;
    let data = load_data(&data_dir)?;
    let g = match data.task {
        Task::NodeClassification => &data.graphs[0],
        Task::GraphClassification => data
            .graphs
            .iter()
            .find(|g| g.name() == explanation.graph)
            .or_else(|| (data.graphs.len() == 1).then(|| &data.graphs[0]))
            .ok_or_else(|| {
                CliError::new(
                    "E-ARG",
                    format!(
                        "dataset {} has no graph named {:?}",
                        data.name, explanation.graph
                    ),
                )
            })?,
    };
    let text = dot::render(g, &explanation.importance, top_k)?;
    let dir = prepare_out(&s, "export-dot", &out)?;
    write(&dir.join("graph.dot"), &text)
}
