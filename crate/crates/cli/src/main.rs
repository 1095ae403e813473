use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dialogic::diarize::{assign_roster, temporal_smooth, Roster};
use dialogic::emotion::read_timeline;
use dialogic::featureio::{load_wav, read_annotations, read_embeddings, read_emotions, read_texts};
use dialogic::hypothesize::HypothesisConfig;
use dialogic::pipeline::{
    audio_embeddings, cluster_windows, emit_charts, emit_clauses, emit_emotions, emit_hypotheses, emit_interactions,
    emit_transcript, emit_utterances, load_utterances, run_pipeline, speaker_list, Recording, RunConfig, StageStatus,
    EMOTIONS_FILE,
};
use dialogic::text::read_transcript_ext;

#[derive(Parser)]
#[command(name = "dialogic", version, about = "Conversation analytics for recorded team discussions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Parent directory of the run directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "interval-s")]
    interval_s: Option<f64>,
    #[arg(long = "trim-s")]
    trim_s: Option<f64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out = std::path::absolute(out)?;
        }
        if let Some(i) = self.interval_s {
            cfg.interval_s = i;
        }
        if let Some(t) = self.trim_s {
            cfg.trim_s = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage the inputs allow and write a manifest.
    Run(ConfigArgs),
    /// Cluster windows into speakers and write utterances.csv.
    Diarize(ConfigArgs),
    /// Interaction graphs and interruption statistics from utterances.csv.
    Interact(ConfigArgs),
    /// Emotion timeline and deviation counts.
    Emotions(ConfigArgs),
    /// Privacy-trimmed transcript and speech rates.
    Transcript(ConfigArgs),
    /// Clauses of the annotated transcript sentences.
    Clauses(ConfigArgs),
    /// Hypotheses across one or more finished recordings.
    Hypothesize(HypothesizeArgs),
    /// Speaker and emotion charts.
    Report(ConfigArgs),
}

#[derive(Args)]
struct HypothesizeArgs {
    /// Run directory of a recording; repeat for several teams.
    #[arg(long = "recording", required = true)]
    recordings: Vec<PathBuf>,
    /// Where hypotheses.json and clusters.json are written.
    #[arg(long)]
    out: PathBuf,
    /// Run configuration supplying thresholds and interval settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "interval-s")]
    interval_s: Option<f64>,
}

fn run_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.run_dir();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn input(cfg: &RunConfig, p: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    match p {
        Some(p) => Ok(cfg.resolve(p)),
        None => bail!("the config has no {what} input"),
    }
}

fn roster_ids(cfg: &RunConfig) -> Result<Option<Vec<String>>> {
    Ok(cfg.roster.as_deref().map(|r| Roster::load(cfg.resolve(r))).transpose()?.map(|r| r.ids().to_vec()))
}

fn report(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn diarize(cfg: &RunConfig) -> Result<()> {
    let dir = run_dir(cfg)?;
    let embeddings = match (&cfg.inputs.embeddings, &cfg.inputs.audio) {
        (Some(p), _) => read_embeddings(cfg.resolve(p))?,
        (None, Some(a)) => audio_embeddings(&load_wav(cfg.resolve(a))?)?,
        (None, None) => bail!("diarization needs audio or embeddings"),
    };
    let smoothed = temporal_smooth(&cluster_windows(&embeddings, cfg.speakers, cfg.seed)?);
    let utts = match &cfg.roster {
        Some(r) => assign_roster(&smoothed, &Roster::load(cfg.resolve(r))?)?,
        None => smoothed,
    };
    report(&emit_utterances(&dir, &utts)?);
    Ok(())
}

fn hypothesize(args: &HypothesizeArgs) -> Result<()> {
    let cfg = args.config.as_deref().map(RunConfig::load).transpose()?;
    let hcfg = cfg.as_ref().map_or_else(HypothesisConfig::default, |c| c.hypothesize);
    hcfg.validate()?;
    let interval_s = args.interval_s.or(cfg.as_ref().map(|c| c.interval_s)).unwrap_or(120.0);
    let fallback = cfg.as_ref().map_or(dialogic::EmotionLabel::Sad, |c| c.fallback_emotion);
    let unit = cfg.as_ref().map(|c| c.deviation_unit).unwrap_or_default();
    let recordings = args
        .recordings
        .iter()
        .map(|d| Recording::load(d).with_context(|| format!("loading {}", d.display())))
        .collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(&args.out)?;
    report(&emit_hypotheses(&args.out, &recordings, &hcfg, interval_s, fallback, unit)?);
    Ok(())
}

fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Run(a) => {
            let cfg = a.load()?;
            let manifest = run_pipeline(&cfg)?;
            for s in &manifest.stages {
                let status = match s.status {
                    StageStatus::Ok => "ok",
                    StageStatus::Skipped => "skipped",
                    StageStatus::Failed => "FAILED",
                };
                match &s.detail {
                    Some(d) => println!("{:<12} {status} ({d})", s.name),
                    None => println!("{:<12} {status}", s.name),
                }
            }
            println!("{} files in {}", manifest.files.len() + 1, cfg.run_dir().display());
            return Ok(manifest.succeeded());
        }
        Command::Diarize(a) => diarize(&a.load()?)?,
        Command::Interact(a) => {
            let cfg = a.load()?;
            let dir = run_dir(&cfg)?;
            let utts = load_utterances(&dir)?;
            let speakers = speaker_list(roster_ids(&cfg)?.as_deref(), &utts);
            report(&emit_interactions(
                &dir,
                &cfg.recording_id,
                &utts,
                &speakers,
                cfg.interval_s,
                cfg.interruption_resume_s,
            )?);
        }
        Command::Emotions(a) => {
            let cfg = a.load()?;
            let dir = run_dir(&cfg)?;
            let utts = load_utterances(&dir)?;
            let records = read_emotions(input(&cfg, &cfg.inputs.emotions, "emotions")?)?;
            let (_, files) =
                emit_emotions(&dir, &utts, &records, cfg.fallback_emotion, cfg.deviation_unit, cfg.interval_s)?;
            report(&files);
        }
        Command::Transcript(a) => {
            let cfg = a.load()?;
            let dir = run_dir(&cfg)?;
            let utts = load_utterances(&dir)?;
            let texts = read_texts(input(&cfg, &cfg.inputs.texts, "texts")?, None)?;
            let (_, files) = emit_transcript(&dir, &cfg.recording_id, &utts, &texts, cfg.trim_s)?;
            report(&files);
        }
        Command::Clauses(a) => {
            let cfg = a.load()?;
            let dir = run_dir(&cfg)?;
            let entries = read_transcript_ext(dir.join(dialogic::pipeline::TRANSCRIPT_EXT_FILE))
                .context("clauses need the transcript stage's output")?;
            let annotations = read_annotations(input(&cfg, &cfg.inputs.annotations, "annotations")?)?;
            let (_, files) = emit_clauses(&dir, &annotations, &entries, cfg.interval_s)?;
            report(&files);
        }
        Command::Hypothesize(a) => hypothesize(&a)?,
        Command::Report(a) => {
            let cfg = a.load()?;
            let dir = run_dir(&cfg)?;
            let utts = load_utterances(&dir)?;
            let emotions = dir.join(EMOTIONS_FILE);
            let timeline = emotions.is_file().then(|| read_timeline(&emotions)).transpose()?;
            let speakers = speaker_list(roster_ids(&cfg)?.as_deref(), &utts);
            report(&emit_charts(&dir, &utts, timeline.as_ref(), &speakers, cfg.interval_s)?);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
