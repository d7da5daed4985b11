use anyhow::{bail, Context, Result};
use bace_core::bace::RECOMMENDED_CODERS;
use bace_core::data::{push_csv_row, write_annotations_csv, write_gold_csv};
use bace_core::reliability::PairStat;
use bace_core::{
    bace_fit, build_matrix, ds_fit, majority_vote, model_comparison, parse_annotations, parse_gold,
    reliability_report, simulate_dataset, AnnotationMatrix, ComparisonConfig, DsConfig, GibbsConfig, LabelSet,
    Model, SimConfig,
};
use serde_json::{json, Value};

use crate::manifest::{sibling, RunManifest};
use crate::{AggregateArgs, Command, EmArgs, EvaluateArgs, InputArgs, ReliabilityArgs, SamplerArgs, SimulateArgs};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Reliability(args) => reliability(args),
        Command::Aggregate(args) => aggregate(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Simulate(args) => simulate(args),
    }
}

fn load_matrix(manifest: &mut RunManifest, input: &InputArgs) -> Result<AnnotationMatrix> {
    let text = manifest.read_input("annotations", &input.input)?;
    let labels = input.labels.as_deref().map(LabelSet::parse_list).transpose()?;
    let table = parse_annotations(&text, labels.as_ref())
        .with_context(|| format!("in {}", input.input.display()))?;
    Ok(build_matrix(&table)?)
}

fn warn_few_coders(manifest: &mut RunManifest, matrix: &AnnotationMatrix) {
    let m = matrix.n_coders();
    if m < RECOMMENDED_CODERS {
        manifest.warn(format!(
            "only {m} coder(s); the model is recommended for data coded by at least {RECOMMENDED_CODERS} coders"
        ));
    }
}

fn to_json(value: &impl serde::Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn gibbs_config(sampler: &SamplerArgs, seed: u64) -> GibbsConfig<f64> {
    GibbsConfig {
        burn_in: sampler.burn_in,
        samples: sampler.samples,
        chains: sampler.chains,
        seed,
        priors: None,
    }
}

fn ds_config(em: &EmArgs) -> DsConfig<f64> {
    DsConfig {
        max_iters: em.max_iters,
        tol: em.tol,
        smoothing: em.smoothing,
    }
}

fn display3(x: f64) -> String {
    format!("{x:.3}")
}

fn display_pairs(pairs: &[PairStat<f64>]) -> Value {
    pairs
        .iter()
        .map(|p| json!({ "coder_a": p.coder_a, "coder_b": p.coder_b, "value": display3(p.value) }))
        .collect()
}

fn reliability(args: ReliabilityArgs) -> Result<()> {
    let options = json!({ "input": args.input.input, "labels": args.input.labels, "output": args.output });
    let mut manifest = RunManifest::new("reliability", options, None);
    let matrix = load_matrix(&mut manifest, &args.input)?;
    let report = reliability_report::<f64>(&matrix)?;
    if report.fleiss_excluded_items > 0 {
        manifest.warn(format!(
            "Fleiss' kappa excludes {} item(s) not annotated by every coder",
            report.fleiss_excluded_items
        ));
    }
    let display = json!({
        "pairwise_percent_agreement": display_pairs(&report.pairwise_percent_agreement),
        "average_pairwise_percent_agreement": display3(report.average_pairwise_percent_agreement),
        "fleiss_kappa": display3(report.fleiss_kappa),
        "fleiss_observed": display3(report.fleiss_observed),
        "fleiss_expected": display3(report.fleiss_expected),
        "pairwise_cohens_kappa": display_pairs(&report.pairwise_cohens_kappa),
        "average_cohens_kappa": display3(report.average_cohens_kappa),
        "krippendorff_alpha": display3(report.krippendorff_alpha),
    });
    let out = json!({
        "labels": matrix.label_set().labels(),
        "coders": matrix.coders(),
        "report": report,
        "display": display,
    });
    manifest.write_output(&args.output, &to_json(&out)?)?;
    manifest.finish(&args.output)
}

/// Per-item rows for the labels CSV: label, probabilities and optional interval.
struct LabelRows {
    map: Vec<usize>,
    probs: Vec<Vec<f64>>,
    intervals: Option<Vec<(f64, f64)>>,
}

fn labels_csv(matrix: &AnnotationMatrix, rows: &LabelRows) -> String {
    let ls = matrix.label_set();
    let mut header: Vec<String> = vec!["item_id".into(), "map_label".into()];
    header.extend(ls.labels().iter().map(|l| format!("p_{l}")));
    header.extend(["interval_lo".into(), "interval_hi".into()]);
    let mut out = String::new();
    push_csv_row(&mut out, &header.iter().map(String::as_str).collect::<Vec<_>>());
    for (i, item) in matrix.items().iter().enumerate() {
        let mut fields: Vec<String> = vec![item.clone(), ls.name(rows.map[i]).to_string()];
        fields.extend(rows.probs[i].iter().map(|p| p.to_string()));
        match &rows.intervals {
            Some(iv) => fields.extend([iv[i].0.to_string(), iv[i].1.to_string()]),
            None => fields.extend([String::new(), String::new()]),
        }
        push_csv_row(&mut out, &fields.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

fn aggregate(args: AggregateArgs) -> Result<()> {
    let profiles_path = args.profiles.clone().unwrap_or_else(|| sibling(&args.output, "profiles.json"));
    let mut options = json!({
        "input": args.input.input,
        "labels": args.input.labels,
        "model": args.model,
        "output": args.output,
        "profiles": profiles_path,
        "seed": args.seed,
    });
    match args.model {
        Model::Bace => options["sampler"] = serde_json::to_value(&args.sampler)?,
        Model::Ds => options["em"] = serde_json::to_value(&args.em)?,
        Model::Majority => options["tie"] = serde_json::to_value(args.tie)?,
    }
    let mut manifest = RunManifest::new("aggregate", options, Some(args.seed));
    let matrix = load_matrix(&mut manifest, &args.input)?;
    let labels = matrix.label_set().labels();

    let (rows, profiles) = match args.model {
        Model::Bace => {
            let fit = bace_fit::<f64>(&matrix, &gibbs_config(&args.sampler, args.seed))?;
            for w in &fit.warnings {
                manifest.warn(w.clone());
            }
            let coders: Vec<Value> = fit
                .profiles
                .iter()
                .map(|p| {
                    let gamma: Vec<Value> = labels
                        .iter()
                        .zip(p.gamma_mean.iter().zip(&p.gamma_interval_95))
                        .map(|(l, (mean, iv))| json!({ "label": l, "mean": mean, "interval_95": [iv.0, iv.1] }))
                        .collect();
                    json!({
                        "coder_id": p.coder_id,
                        "beta": { "mean": p.beta_mean, "interval_95": [p.beta_interval_95.0, p.beta_interval_95.1] },
                        "gamma": gamma,
                    })
                })
                .collect();
            let profiles = json!({
                "model": "bace",
                "labels": labels,
                "coders": coders,
                "truth_prior_mean": fit.truth_prior_mean,
                "config": fit.config,
                "draws_per_chain": fit.diagnostics.draws_per_chain,
            });
            let rows = LabelRows {
                map: fit.map_labels(),
                probs: fit.labels.iter().map(|l| l.pmf.clone()).collect(),
                intervals: Some(fit.labels.iter().map(|l| l.map_probability_interval_95).collect()),
            };
            (rows, profiles)
        }
        Model::Ds => {
            warn_few_coders(&mut manifest, &matrix);
            let fit = ds_fit::<f64>(&matrix, &ds_config(&args.em))?;
            if !fit.converged {
                manifest.warn(format!("EM stopped after {} iterations without converging", fit.iterations));
            }
            let coders: Vec<Value> = fit
                .confusions
                .iter()
                .map(|c| json!({ "coder_id": c.coder_id, "confusion": c.rows }))
                .collect();
            let profiles = json!({
                "model": "ds",
                "labels": labels,
                "coders": coders,
                "prior": fit.prior,
                "log_likelihood": fit.log_likelihood,
                "iterations": fit.iterations,
                "converged": fit.converged,
            });
            let rows = LabelRows { map: fit.map_labels, probs: fit.posteriors, intervals: None };
            (rows, profiles)
        }
        Model::Majority => {
            warn_few_coders(&mut manifest, &matrix);
            let fit = majority_vote(&matrix, args.tie, args.seed)?;
            let tied: Vec<&String> = matrix
                .items()
                .iter()
                .zip(&fit.items)
                .filter(|(_, it)| it.tie_broken)
                .map(|(id, _)| id)
                .collect();
            let profiles = json!({
                "model": "majority",
                "labels": labels,
                "label_frequencies": matrix.label_frequencies(),
                "tie": args.tie,
                "tie_broken_items": tied,
            });
            let probs = fit
                .items
                .iter()
                .map(|it| {
                    let total: usize = it.votes.iter().sum();
                    it.votes.iter().map(|&v| v as f64 / total as f64).collect()
                })
                .collect();
            let rows = LabelRows { map: fit.labels(), probs, intervals: None };
            (rows, profiles)
        }
    };

    manifest.write_output(&args.output, &labels_csv(&matrix, &rows))?;
    manifest.write_output(&profiles_path, &to_json(&profiles)?)?;
    manifest.finish(&args.output)
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let mut models = args.models.clone();
    models.sort();
    models.dedup();
    let mut options = json!({
        "input": args.input.input,
        "labels": args.input.labels,
        "gold": args.gold,
        "output": args.output,
        "models": models,
        "seed": args.seed,
    });
    if models.contains(&Model::Bace) {
        options["sampler"] = serde_json::to_value(&args.sampler)?;
    }
    if models.contains(&Model::Ds) {
        options["em"] = serde_json::to_value(&args.em)?;
    }
    if models.contains(&Model::Majority) {
        options["tie"] = serde_json::to_value(args.tie)?;
    }
    let mut manifest = RunManifest::new("evaluate", options, Some(args.seed));
    let matrix = load_matrix(&mut manifest, &args.input)?;
    let gold_text = manifest.read_input("gold", &args.gold)?;
    let gold = parse_gold(&gold_text, matrix.label_set()).with_context(|| format!("in {}", args.gold.display()))?;
    warn_few_coders(&mut manifest, &matrix);

    let config = ComparisonConfig {
        models: models.clone(),
        bace: gibbs_config(&args.sampler, args.seed),
        ds: ds_config(&args.em),
        tie_mode: args.tie,
        tie_seed: args.seed,
    };
    let table = model_comparison(&matrix, &gold, &config)?;
    if !table.partition.excluded.is_empty() {
        manifest.warn(format!(
            "{} gold item(s) have fewer than 2 annotations and are excluded",
            table.partition.excluded.len()
        ));
    }
    let out = json!({
        "labels": matrix.label_set().labels(),
        "rows": table.rows,
        "partition": {
            "clear": table.partition.clear.len(),
            "ambiguous": table.partition.ambiguous.len(),
            "excluded": table.partition.excluded.len(),
            "excluded_items": table.partition.excluded,
        },
    });
    manifest.write_output(&args.output, &to_json(&out)?)?;
    manifest.finish(&args.output)
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut manifest = RunManifest::new("simulate", Value::Null, None);
    let mut config: SimConfig<f64> = match &args.config {
        Some(path) => {
            let text = manifest.read_input("config", path)?;
            serde_json::from_str(&text).with_context(|| format!("invalid simulation config {}", path.display()))?
        }
        None => SimConfig::three_coder_valence(1000, 0),
    };
    if let Some(n) = args.items {
        config.n_items = n;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(rate) = args.missing_rate {
        config.missing_rate = rate;
    }
    if let Some(betas) = &args.beta {
        if betas.len() != config.coders.len() {
            bail!("--beta has {} values but the config has {} coders", betas.len(), config.coders.len());
        }
        for (c, &b) in config.coders.iter_mut().zip(betas) {
            c.beta = b;
        }
    }
    if let Some(list) = &args.labels {
        config.labels = LabelSet::parse_list(list)?.labels().to_vec();
    }
    manifest.seed = Some(config.seed);
    manifest.options = json!({
        "config_file": args.config,
        "resolved_config": config,
        "output": args.output,
        "truth": args.truth,
    });

    let data = simulate_dataset(&config)?;
    let ls = data.matrix.label_set();
    manifest.write_output(&args.output, &write_annotations_csv(&data.matrix))?;
    manifest.write_output(&args.truth, &write_gold_csv(data.matrix.items(), &data.truth, ls))?;
    manifest.finish(&args.output)
}
