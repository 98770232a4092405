use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use dyadscreen::corpus::{build_document, parse_corpus, save_corpus, Budget, Encounter};
use dyadscreen::embedpool::{
    embedding_feature_matrix, ingest_vectors, write_vectors, ChunkManifest, PseudoEmbedder,
};
use dyadscreen::eval::{
    report, run_ablation, run_cv, zeroshot_metrics, AblationInputs, AblationSettings, EvalReport,
    Grid, ModelKind, ReportRow,
};
use dyadscreen::lexicon::{lexicon_feature_matrix, Lexicon};
use dyadscreen::model::{fit, FeatureMatrix, LogRegConfig};
use dyadscreen::stats::{coefficient_csv, coefficient_summary, group_diff_csv, group_difference_table};
use dyadscreen::synth::{generate_corpus, SynthSpec};
use dyadscreen::zeroshot::{
    read_scores, score_corpus, write_scores, EndpointConfig, HttpChatClient, ScoringOptions,
    PROMPT_VERSION,
};
use dyadscreen::Error;

use crate::{
    AblateArgs, ChunksCommand, Command, EvalArgs, FeaturizeArgs, PoolArgs, StatsArgs,
    SynthArgs, TrainArgs, ZeroshotArgs, ZeroshotEvalArgs,
};

/// Attributes library errors to their module.
trait Core<T> {
    fn core(self) -> Result<T>;
}

impl<T, E: Into<Error>> Core<T> for std::result::Result<T, E> {
    fn core(self) -> Result<T> {
        self.map_err(|e| anyhow::Error::new(e.into()))
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Featurize(a) => featurize(a),
        Command::Chunks(ChunksCommand::Export(a)) => {
            let encounters = load_corpus(&a.corpus.corpus)?;
            if a.chunk_size == 0 {
                bail!("cli: --chunk-size must be positive");
            }
            let docs: Vec<_> = encounters
                .iter()
                .map(|e| build_document(e, a.config, Budget::Full))
                .collect();
            prepare_output(&a.out)?;
            ChunkManifest::from_documents(&docs, a.chunk_size)
                .write_jsonl(&a.out)
                .core()
        }
        Command::Chunks(ChunksCommand::PseudoEmbed(a)) => {
            require(&a.chunks)?;
            if a.dim == 0 {
                bail!("cli: --dim must be positive");
            }
            let manifest = ChunkManifest::read_jsonl(&a.chunks).core()?;
            let records = PseudoEmbedder::new(a.dim, a.seed).embed_manifest(&manifest);
            prepare_output(&a.out)?;
            write_vectors(&a.out, &records).core()
        }
        Command::Pool(a) => pool(a),
        Command::Eval(a) => eval(a),
        Command::Ablate(a) => ablate(a),
        Command::Stats(a) => stats(a),
        Command::Zeroshot(a) => zeroshot(a),
        Command::ZeroshotEval(a) => zeroshot_eval(a),
        Command::Synth(a) => synth(a),
        Command::Report(a) => {
            require(&a.input)?;
            let text = fs::read_to_string(&a.input)
                .with_context(|| format!("cli: cannot read {}", a.input.display()))?;
            let report: EvalReport = serde_json::from_str(&text)
                .with_context(|| format!("cli: {} is not a report.json", a.input.display()))?;
            write_report(&report, &a.out_dir)
        }
    }
}

fn require(path: &Path) -> Result<()> {
    if !path.exists() {
        bail!("cli: input not found: {}", path.display());
    }
    Ok(())
}

fn prepare_output(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cli: cannot create {}", dir.display()))?;
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    prepare_output(path)?;
    fs::write(path, contents).with_context(|| format!("cli: cannot write {}", path.display()))
}

fn load_corpus(path: &Path) -> Result<Vec<Encounter>> {
    require(path)?;
    parse_corpus(path).core()
}

fn load_lexicon(path: Option<&PathBuf>) -> Result<Lexicon> {
    match path {
        Some(p) => {
            require(p)?;
            Lexicon::parse_file(p).core()
        }
        None => Ok(Lexicon::demo()),
    }
}

fn logreg(t: &TrainArgs) -> Result<LogRegConfig> {
    if t.k < 2 {
        bail!("cli: --k must be at least 2");
    }
    Ok(LogRegConfig {
        c: t.c,
        tol: t.tol,
        max_iter: t.max_iter,
    })
}

fn write_report(report: &EvalReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cli: cannot create {}", dir.display()))?;
    let json = serde_json::to_string_pretty(report).context("cli: cannot serialize report")?;
    write_file(&dir.join("report.json"), &(json + "\n"))?;
    write_file(&dir.join("report.md"), &report::markdown(report))?;
    write_file(&dir.join("summary.csv"), &report::summary_csv(report))?;
    write_file(&dir.join("per_fold.csv"), &report::per_fold_csv(report))?;
    write_file(&dir.join("curve.csv"), &report::curve_csv(report))
}

fn featurize(a: FeaturizeArgs) -> Result<()> {
    let encounters = load_corpus(&a.corpus.corpus)?;
    let lexicon = load_lexicon(a.lexicon.lexicon.as_ref())?;
    let fm = lexicon_feature_matrix(&encounters, &lexicon, a.config, a.budget);
    prepare_output(&a.out)?;
    fm.write_csv(&a.out).core()
}

fn pool(a: PoolArgs) -> Result<()> {
    let encounters = load_corpus(&a.corpus.corpus)?;
    require(&a.chunks)?;
    require(&a.vectors)?;
    let manifest = ChunkManifest::read_jsonl(&a.chunks).core()?;
    let vectors = ingest_vectors(&a.vectors, &manifest).core()?;
    let fm = embedding_feature_matrix(&encounters, &vectors, a.config, a.budget, a.chunk_size).core()?;
    prepare_output(&a.out)?;
    fm.write_csv(&a.out).core()
}

fn footer(t: &TrainArgs, n: usize) -> Vec<(String, String)> {
    vec![
        ("version".into(), env!("CARGO_PKG_VERSION").into()),
        ("seed".into(), t.seed.to_string()),
        ("k".into(), t.k.to_string()),
        ("C".into(), t.c.to_string()),
        ("tol".into(), t.tol.to_string()),
        ("max_iter".into(), t.max_iter.to_string()),
        ("n_encounters".into(), n.to_string()),
        (
            "threshold".into(),
            "F1-max threshold chosen on each fold's held-out scores (optimistic)".into(),
        ),
    ]
}

fn eval(a: EvalArgs) -> Result<()> {
    require(&a.features)?;
    let config = logreg(&a.train)?;
    let fm = FeatureMatrix::read_csv(&a.features).core()?;
    let outcome = run_cv(&fm, a.train.k, a.train.seed, &config).core()?;
    let mut footer = footer(&a.train, fm.n_rows());
    footer.insert(0, ("features".into(), a.features.display().to_string()));
    let report = EvalReport {
        rows: vec![ReportRow {
            model: a.model,
            config: a.config,
            budget: a.budget,
            folds: outcome.folds,
            cross_validated: true,
            excluded: 0,
        }],
        footer,
    };
    write_report(&report, &a.out_dir)?;
    if let Some(path) = &a.save_model {
        let model = fit(&fm, &config).core()?;
        prepare_output(path)?;
        model.save(path).core()?;
    }
    Ok(())
}

fn ablate(a: AblateArgs) -> Result<()> {
    let logreg = logreg(&a.train)?;
    let encounters = load_corpus(&a.corpus.corpus)?;
    let needs = |m: ModelKind| a.models.contains(&m);
    let lexicon = if needs(ModelKind::LexiconLr) {
        Some(load_lexicon(a.lexicon.lexicon.as_ref())?)
    } else {
        None
    };
    let mut inputs = AblationInputs {
        encounters: &encounters,
        lexicon: lexicon.as_ref(),
        chunk_size: a.chunk_size,
        ..Default::default()
    };
    if needs(ModelKind::EmbeddingLr) {
        let Some(dir) = &a.embeddings_dir else {
            bail!("cli: embedding-lr needs --embeddings-dir");
        };
        for &config in &a.configs {
            let chunks = dir.join(format!("chunks-{config}.jsonl"));
            let vectors = dir.join(format!("vectors-{config}.jsonl"));
            require(&chunks)?;
            require(&vectors)?;
            let manifest = ChunkManifest::read_jsonl(&chunks).core()?;
            inputs
                .embeddings
                .insert(config, ingest_vectors(&vectors, &manifest).core()?);
        }
    }
    if needs(ModelKind::ZeroShot) {
        let Some(dir) = &a.scores_dir else {
            bail!("cli: zero-shot needs --scores-dir");
        };
        for &config in &a.configs {
            for &budget in &a.budgets {
                let path = dir.join(format!("scores-{config}-{budget}.csv"));
                require(&path)?;
                inputs
                    .scores
                    .insert((config, budget), read_scores(&path).core()?);
            }
        }
    }
    let grid = Grid {
        models: a.models.clone(),
        configs: a.configs.clone(),
        budgets: a.budgets.clone(),
    };
    let settings = AblationSettings {
        k: a.train.k,
        seed: a.train.seed,
        logreg,
    };
    let report = run_ablation(&inputs, &grid, &settings).core()?;
    write_report(&report, &a.out_dir)
}

fn stats(a: StatsArgs) -> Result<()> {
    let encounters = load_corpus(&a.corpus.corpus)?;
    let lexicon = load_lexicon(a.lexicon.lexicon.as_ref())?;
    let table = group_difference_table(&encounters, &lexicon, &a.configs).core()?;
    write_file(&a.out, &group_diff_csv(&table))?;
    if let (Some(features), Some(out)) = (&a.features, &a.coefficients_out) {
        require(features)?;
        let config = logreg(&a.train)?;
        let fm = FeatureMatrix::read_csv(features).core()?;
        let outcome = run_cv(&fm, a.train.k, a.train.seed, &config).core()?;
        let summary = coefficient_summary(&outcome.models, a.top_k).core()?;
        write_file(out, &coefficient_csv(&summary))?;
    }
    Ok(())
}

fn zeroshot(a: ZeroshotArgs) -> Result<()> {
    let encounters = load_corpus(&a.corpus.corpus)?;
    let docs: Vec<_> = encounters
        .iter()
        .map(|e| build_document(e, a.config, a.budget))
        .collect();
    let mut endpoint = EndpointConfig::from_env(a.url, a.model);
    endpoint.timeout = Duration::from_secs(a.timeout_secs);
    let client = HttpChatClient::new(endpoint);
    let opts = ScoringOptions {
        retries: a.retries,
        concurrency: a.concurrency.max(1),
        backoff: Duration::from_millis(a.backoff_ms),
    };
    let records = score_corpus(&docs, &client, &opts).core()?;
    prepare_output(&a.out)?;
    write_scores(&a.out, &records).core()
}

fn zeroshot_eval(a: ZeroshotEvalArgs) -> Result<()> {
    let encounters = load_corpus(&a.corpus.corpus)?;
    require(&a.scores)?;
    let records = read_scores(&a.scores).core()?;
    let (metrics, excluded) = zeroshot_metrics(&encounters, &records).core()?;
    let report = EvalReport {
        rows: vec![ReportRow {
            model: ModelKind::ZeroShot,
            config: a.config,
            budget: a.budget,
            folds: vec![metrics],
            cross_validated: false,
            excluded,
        }],
        footer: vec![
            ("version".into(), env!("CARGO_PKG_VERSION").into()),
            ("scores".into(), a.scores.display().to_string()),
            ("n_encounters".into(), encounters.len().to_string()),
            ("prompt_version".into(), PROMPT_VERSION.into()),
            ("zero_shot_excluded".into(), format!("{excluded} excluded")),
            (
                "threshold".into(),
                "F1-max threshold chosen on the full dataset".into(),
            ),
        ],
    };
    write_report(&report, &a.out_dir)
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut spec = match &a.spec {
        Some(path) => {
            require(path)?;
            SynthSpec::from_json_file(path).core()?
        }
        None => SynthSpec::demo(a.n, 0),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let (encounters, truth) = generate_corpus(&spec).core()?;
    prepare_output(&a.out)?;
    save_corpus(&a.out, &encounters).core()?;
    if let Some(path) = &a.truth {
        let json = serde_json::to_string_pretty(&truth).context("cli: cannot serialize truth")?;
        write_file(path, &(json + "\n"))?;
    }
    if let Some(path) = &a.write_spec {
        let json = serde_json::to_string_pretty(&spec).context("cli: cannot serialize spec")?;
        write_file(path, &(json + "\n"))?;
    }
    Ok(())
}
