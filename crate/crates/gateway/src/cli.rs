use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::Ordering;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use guidebot::cloudadapters::polly::{self, PollyTts};
use guidebot::cloudadapters::{DirSink, MockTts, SpeakLoop, SpeechClientConfig, TextToSpeech};
use guidebot::msgbus::Bus;
use guidebot::simrobot::{parse_script, replay, EventRecord, Session, SimConfig, DEFAULT_SETTLE_LIMIT};

use crate::config::{default_start, load_inputs, parse_start, Inputs};
use crate::service::{bind, serve, LiveSession};

#[derive(Debug, Parser)]
#[command(name = "guidebot", version, about = "Voice-commanded guide robot sessions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Start a live session with the console service.
    Run(RunArgs),
    /// Play a script to completion; print the event log and final state.
    Replay(ReplayArgs),
    /// Check map and lexicon files.
    Validate(InputArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Site map JSON.
    #[arg(long)]
    pub map: PathBuf,
    /// Lexicon JSON.
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Wake phrase, overriding the lexicon file.
    #[arg(long)]
    pub wake: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Tick period in milliseconds.
    #[arg(long, default_value_t = 100)]
    pub tick_ms: u64,
    /// Start pose as FLOOR:COL,ROW. Defaults to the first free cell.
    #[arg(long)]
    pub start: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TtsBackend {
    /// Writes the response text itself as the clip.
    Mock,
    /// Amazon Polly.
    Polly,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Address of the console service.
    #[arg(long, env = "GUIDEBOT_LISTEN", default_value = "127.0.0.1:8080")]
    pub listen: String,
    /// Directory for synthesized response clips. Speech output is off without it.
    #[arg(long)]
    pub clips: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TtsBackend::Mock, requires = "clips")]
    pub tts: TtsBackend,
    #[arg(long, default_value = polly::DEFAULT_ENDPOINT)]
    pub tts_endpoint: String,
    /// Environment variable holding the TTS credential.
    #[arg(long, default_value = "GUIDEBOT_TTS_CREDENTIAL")]
    pub tts_credential_env: String,
    #[arg(long, default_value_t = 10_000)]
    pub tts_timeout_ms: u64,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Script: one utterance per line, `#tick N` advances N ticks.
    #[arg(long)]
    pub script: PathBuf,
    /// Write clips of the spoken responses (mock synthesis) here.
    #[arg(long)]
    pub clips: Option<PathBuf>,
}

fn load(args: &InputArgs) -> Result<Inputs> {
    load_inputs(&args.map, &args.lexicon, args.wake.as_deref())
}

fn build_session(inputs: Inputs, sim: &SimArgs) -> Result<Session> {
    let start = match &sim.start {
        Some(raw) => parse_start(raw)?,
        None => default_start(&inputs.site)?,
    };
    let mut cfg = SimConfig::new(start);
    cfg.tick_ms = sim.tick_ms;
    let session = Session::new(
        Bus::new(),
        Arc::new(inputs.site),
        inputs.lexicon.lexicon,
        inputs.lexicon.wake,
        cfg,
    )?;
    Ok(session)
}

/// Runs a parsed command. Errors map to exit code 1.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate(args) => {
            let inputs = load(&args)?;
            println!(
                "ok: {} floors, {} locations, {} shafts",
                inputs.site.floors().count(),
                inputs.site.locations().count(),
                inputs.site.shafts().len()
            );
            Ok(())
        }
        Command::Replay(args) => run_replay(&args),
        Command::Run(args) => run_live(args),
    }
}

fn run_replay(args: &ReplayArgs) -> Result<()> {
    let inputs = load(&args.inputs)?;
    let script_text = std::fs::read_to_string(&args.script)
        .with_context(|| format!("cannot read script file {}", args.script.display()))?;
    let script = parse_script(&script_text).with_context(|| format!("script {}", args.script.display()))?;
    let mut session = build_session(inputs, &args.sim)?;
    if let Some(dir) = &args.clips {
        let sink = DirSink::new(dir).with_context(|| format!("clips directory {}", dir.display()))?;
        let speaker = SpeakLoop::new(
            session.bus(),
            Box::new(MockTts),
            SpeechClientConfig::offline(),
            Box::new(sink),
        )?;
        session.set_speaker(speaker);
    }
    let report = replay(&mut session, &script, DEFAULT_SETTLE_LIMIT)?;
    let mut out = std::io::stdout().lock();
    out.write_all(session.event_log_ndjson().as_bytes())?;
    let last = EventRecord {
        t: report.ticks,
        kind: "final_state".into(),
        topic: None,
        seq: None,
        payload: serde_json::to_value(&report.final_state)?,
    };
    writeln!(out, "{}", serde_json::to_string(&last)?)?;
    out.flush()?;
    Ok(())
}

fn tts_client(args: &RunArgs) -> Result<(Box<dyn TextToSpeech>, SpeechClientConfig)> {
    Ok(match args.tts {
        TtsBackend::Mock => (Box::new(MockTts), SpeechClientConfig::offline()),
        TtsBackend::Polly => {
            let cfg = SpeechClientConfig::new(&args.tts_endpoint, &args.tts_credential_env, args.tts_timeout_ms)?;
            (Box::new(PollyTts::default()), cfg)
        }
    })
}

fn run_live(args: RunArgs) -> Result<()> {
    let inputs = load(&args.inputs)?;
    let session = build_session(inputs, &args.sim)?;
    let speaker = match &args.clips {
        Some(dir) => {
            let sink = DirSink::new(dir).with_context(|| format!("clips directory {}", dir.display()))?;
            let (client, cfg) = tts_client(&args)?;
            Some(SpeakLoop::new(session.bus(), client, cfg, Box::new(sink))?)
        }
        None => None,
    };

    let runtime = tokio::runtime::Runtime::new().context("cannot start async runtime")?;
    let (listener, local) = runtime
        .block_on(bind(&args.listen))
        .with_context(|| format!("cannot listen on {}", args.listen))?;

    let live = LiveSession::start(session);
    let flag = live.shutdown_flag();
    let speaker_thread = speaker.map(|mut s| {
        let flag = flag.clone();
        std::thread::spawn(move || s.run(&flag))
    });

    println!("listening on {local}");
    std::io::stdout().flush()?;
    log::info!("console service at http://{local}/ (ws: /ws, inject: POST /utterance, map: /map)");

    let served = runtime.block_on(serve(listener, live.hub(), async {
        let _ = tokio::signal::ctrl_c().await;
        log::info!("shutting down");
    }));
    flag.store(true, Ordering::Relaxed);
    live.stop();
    if let Some(t) = speaker_thread {
        let _ = t.join();
    }
    served.context("service failed")
}
