use std::fmt::Write as _;
use std::io::Write as _;
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use csdplan_core::plan::{
    self, CurvesRequest, DiffRequest, IsoRequest, Scenario, SolveRequest, SweepRequest, TcoCandidate, TcoRequest,
};
use csdplan_core::tco::{BaselineSystem, CostModel};
use csdplan_core::{classify_workload, AxisSpec, CalibrationSet, Error, SweepMode, SystemDescriptor};
use serde_json::Value;

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_INCONSISTENT: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "csdplan", version, about = "Break-even and cost planning for computational storage arrays")]
struct Cli {
    /// Output format for results.
    #[arg(long, value_enum, global = true, default_value = "json")]
    format: Format,

    /// Write results here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// More log output on standard error (repeat for more).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a calibration file and summarize it.
    Validate(CalArgs),
    /// Report the computation-time ratio class of a workload on a host.
    Classify {
        #[command(flatten)]
        cal: CalArgs,
        #[arg(long)]
        workload: String,
        #[arg(long)]
        host: String,
    },
    /// Find the break-even device count.
    Solve {
        #[command(flatten)]
        cal: CalArgs,
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        sd: Slowdown,
        /// Use slow-down factors fitted from the overloaded measurement at
        /// this much available memory.
        #[arg(long, conflicts_with_all = ["sd_tx", "sd_comp"])]
        available_memory: Option<u64>,
        #[arg(long)]
        k_limit: Option<u32>,
        /// Search bound for the enumeration check.
        #[arg(long)]
        m_max: Option<u32>,
    },
    /// Throughput against device count for several systems.
    Curves {
        #[command(flatten)]
        cal: CalArgs,
        #[arg(long)]
        workload: String,
        /// host:NAME:CORES[:K_LIMIT] or csd:NAME; repeatable.
        #[arg(long = "config", required = true)]
        configs: Vec<SystemDescriptor>,
        #[arg(long, default_value_t = 16)]
        m_max: u32,
        /// System whose single-device throughput is 1.0.
        #[arg(long)]
        normalize_to: SystemDescriptor,
    },
    /// BEP over a two-parameter grid.
    Sweep(SweepArgs),
    /// Grid points of a sweep whose BEP equals a value.
    Iso {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        c: u32,
    },
    /// BEP change as the host CPU slows down.
    Diff {
        #[command(flatten)]
        cal: CalArgs,
        #[command(flatten)]
        target: Target,
        /// Comma-separated sd_comp values.
        #[arg(long, value_delimiter = ',', required = true)]
        sd_comp: Vec<f64>,
    },
    /// Compare the cost of an SSD baseline with CSD candidates.
    Tco {
        #[command(flatten)]
        cal: CalArgs,
        /// Cost model JSON (unit prices and CPU catalog).
        #[arg(long)]
        costs: PathBuf,
        #[arg(long)]
        baseline_cpu: String,
        #[arg(long)]
        ssd_count: u32,
        /// CPU[:CSD_COUNT]; without a count the candidate is sized from
        /// --workload/--host/--csd.
        #[arg(long = "candidate", required = true)]
        candidates: Vec<String>,
        #[arg(long, requires_all = ["host", "csd"])]
        workload: Option<String>,
        #[arg(long)]
        host: Option<String>,
        #[arg(long)]
        csd: Option<String>,
        #[arg(long, default_value_t = 1)]
        cores: u32,
    },
    /// Run the HTTP service.
    Serve {
        #[command(flatten)]
        cal: CalArgs,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Directory with the UI bundle to serve at /.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct CalArgs {
    /// Calibration file.
    #[arg(value_name = "CALIBRATION")]
    path: Option<PathBuf>,
    /// Calibration file, as a flag.
    #[arg(long = "calibration", env = "CSDPLAN_CALIBRATION", value_name = "FILE")]
    flag: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Target {
    #[arg(long)]
    workload: String,
    #[arg(long)]
    host: String,
    #[arg(long)]
    csd: String,
    #[arg(long, default_value_t = 1)]
    cores: u32,
}

#[derive(Args, Debug)]
struct Slowdown {
    #[arg(long)]
    sd_tx: Option<f64>,
    #[arg(long)]
    sd_comp: Option<f64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    cal: CalArgs,
    #[command(flatten)]
    target: Target,
    #[command(flatten)]
    sd: Slowdown,
    #[arg(long, value_enum, default_value = "hardware")]
    mode: Mode,
    /// PARAM:START:STOP:STEP
    #[arg(long)]
    axis_x: AxisSpec,
    /// PARAM:START:STOP:STEP
    #[arg(long)]
    axis_y: AxisSpec,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    Hardware,
    Overload,
    System,
}

impl From<Mode> for SweepMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Hardware => SweepMode::Hardware,
            Mode::Overload => SweepMode::Overload,
            Mode::System => SweepMode::System,
        }
    }
}

/// A failed command: message for standard error plus exit status.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. } | Error::Validation(_) | Error::Io(_) => EXIT_VALIDATION,
            Error::Inconsistent(_) => EXIT_INCONSISTENT,
            Error::Domain(_) | Error::Lookup(_) => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn pick(path: Option<PathBuf>, flag: Option<PathBuf>) -> Result<Option<PathBuf>, Failure> {
    match (path, flag) {
        (Some(p), Some(f)) if p != f && std::env::var_os("CSDPLAN_CALIBRATION").map(PathBuf::from) != Some(f.clone()) => {
            Err(Failure::usage(format!(
                "calibration given twice: {} and {}",
                p.display(),
                f.display()
            )))
        }
        (Some(p), _) => Ok(Some(p)),
        (None, f) => Ok(f),
    }
}

impl CalArgs {
    fn resolve(self) -> Result<PathBuf, Failure> {
        pick(self.path, self.flag)?.ok_or_else(|| {
            Failure::usage("no calibration file: pass CALIBRATION, --calibration, or set CSDPLAN_CALIBRATION")
        })
    }

    fn load(self) -> Result<CalibrationSet, Failure> {
        let path = self.resolve()?;
        load(&path)
    }
}

fn load(path: &PathBuf) -> Result<CalibrationSet, Failure> {
    CalibrationSet::from_path(path).map_err(|e| {
        let mut f = Failure::from(e);
        f.code = EXIT_VALIDATION;
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// What a command produced: JSON always, CSV when the command is tabular.
struct Output {
    json: Value,
    csv: Option<String>,
    code: u8,
}

impl Output {
    fn new(json: impl serde::Serialize, csv: Option<String>) -> Result<Self, Failure> {
        Ok(Self {
            json: serde_json::to_value(json).map_err(|e| Failure::usage(e.to_string()))?,
            csv,
            code: 0,
        })
    }
}

fn run(cli: Cli) -> Result<Output, Failure> {
    match cli.command {
        Command::Validate(cal) => {
            let path = cal.resolve()?;
            let set = load(&path)?;
            log::info!("{} is valid", path.display());
            let csv = format!(
                "workloads,hosts,csds,measurements\n{},{},{},{}\n",
                set.workloads().len(),
                set.hosts().len(),
                set.csds().len(),
                set.measurements().len()
            );
            Output::new(plan::summarize(&set), Some(csv))
        }
        Command::Classify { cal, workload, host } => {
            let set = cal.load()?;
            let c = classify_workload(&set, &workload, &host)?;
            let kind = serde_json::to_value(c.class).map_err(|e| Failure::usage(e.to_string()))?;
            let csv = format!(
                "workload,host,ctr,class\n{},{},{},{}\n",
                csv_field(&workload),
                csv_field(&host),
                c.ctr,
                kind.as_str().unwrap_or_default()
            );
            Output::new(c, Some(csv))
        }
        Command::Solve {
            cal,
            target,
            sd,
            available_memory,
            k_limit,
            m_max,
        } => {
            let set = cal.load()?;
            let req = SolveRequest {
                workload: target.workload,
                host: target.host,
                csd: target.csd,
                cores: target.cores,
                sd_tx: sd.sd_tx,
                sd_comp: sd.sd_comp,
                available_memory_bytes: available_memory,
                k_limit,
                m_max,
            };
            let r = plan::solve(&set, &req)?;
            let method = serde_json::to_value(r.method).map_err(|e| Failure::usage(e.to_string()))?;
            let csv = format!(
                "bep,method,saturated,infeasible,searched_bound\n{},{},{},{},{}\n",
                opt(r.bep),
                method.as_str().unwrap_or_default(),
                r.saturated,
                r.infeasible,
                opt(r.searched_bound)
            );
            let infeasible = r.infeasible;
            let mut out = Output::new(r, Some(csv))?;
            if infeasible {
                log::warn!("no break-even point up to the search bound");
                out.code = EXIT_INFEASIBLE;
            }
            Ok(out)
        }
        Command::Curves {
            cal,
            workload,
            configs,
            m_max,
            normalize_to,
        } => {
            let set = cal.load()?;
            let req = CurvesRequest {
                workload,
                configs,
                m_max,
                normalize_to,
            };
            let c = plan::curves(&set, &req)?;
            let csv = c.to_csv();
            Output::new(c, Some(csv))
        }
        Command::Sweep(args) => {
            let (set, req) = args.request()?;
            let s = plan::sweep(&set, &req)?;
            let csv = s.to_csv();
            Output::new(s, Some(csv))
        }
        Command::Iso { sweep, c } => {
            let (set, req) = sweep.request()?;
            let r = plan::iso(&set, &IsoRequest { sweep: req, c })?;
            let mut csv = String::from("x,y\n");
            for (x, y) in &r.points {
                let _ = writeln!(csv, "{x},{y}");
            }
            Output::new(r, Some(csv))
        }
        Command::Diff { cal, target, sd_comp } => {
            let set = cal.load()?;
            let req = DiffRequest {
                workload: target.workload,
                host: target.host,
                csd: target.csd,
                cores: target.cores,
                sd_comp_values: sd_comp,
            };
            let r = plan::diff(&set, &req)?;
            let mut csv = String::from("sd_comp,bep,diff_from_base\n");
            for p in &r.series {
                let _ = writeln!(csv, "{},{},{}", p.sd_comp, p.bep, p.diff_from_base);
            }
            Output::new(r, Some(csv))
        }
        Command::Tco {
            cal,
            costs,
            baseline_cpu,
            ssd_count,
            candidates,
            workload,
            host,
            csd,
            cores,
        } => {
            let text = std::fs::read_to_string(&costs)
                .map_err(|e| Failure::usage(format!("{}: {e}", costs.display())))?;
            let cost_model = CostModel::from_json_str(&text).map_err(|e| {
                let mut f = Failure::from(e);
                f.message = format!("{}: {}", costs.display(), f.message);
                f
            })?;
            let candidates = candidates
                .iter()
                .map(|c| parse_candidate(c))
                .collect::<Result<Vec<_>, _>>()?;
            let scenario = match (workload, host, csd) {
                (Some(workload), Some(host), Some(csd)) => Some(Scenario {
                    workload,
                    host,
                    csd,
                    cores,
                }),
                _ => None,
            };
            let set = match (&scenario, pick(cal.path, cal.flag)?) {
                (Some(_), Some(p)) => Some(load(&p)?),
                (Some(_), None) => return Err(Failure::usage("sizing candidates needs a calibration file")),
                (None, _) => None,
            };
            let req = TcoRequest {
                baseline: BaselineSystem {
                    cpu: baseline_cpu,
                    ssd_count,
                },
                candidates,
                cost_model,
                scenario,
            };
            let r = plan::tco(set.as_ref(), &req)?;
            let csv = r.to_csv();
            Output::new(r, Some(csv))
        }
        Command::Serve {
            cal,
            port,
            bind,
            static_dir,
        } => {
            let path = cal.resolve()?;
            let set = load(&path)?;
            let state = Arc::new(csdplan_service::AppState::new(set, Some(path)));
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::usage(e.to_string()))?;
            rt.block_on(csdplan_service::serve(SocketAddr::new(bind, port), state, static_dir))
                .map_err(|e| Failure::usage(format!("serve: {e}")))?;
            Output::new(Value::Null, None)
        }
    }
}

impl SweepArgs {
    fn request(self) -> Result<(CalibrationSet, SweepRequest), Failure> {
        let set = self.cal.load()?;
        let req = SweepRequest {
            workload: self.target.workload,
            host: self.target.host,
            csd: self.target.csd,
            cores: self.target.cores,
            sd_tx: self.sd.sd_tx,
            sd_comp: self.sd.sd_comp,
            mode: self.mode.into(),
            axis_x: self.axis_x,
            axis_y: self.axis_y,
        };
        Ok((set, req))
    }
}

fn parse_candidate(s: &str) -> Result<TcoCandidate, Failure> {
    let (cpu, count) = match s.rsplit_once(':') {
        Some((cpu, n)) => {
            let n = n
                .parse::<u32>()
                .map_err(|_| Failure::usage(format!("candidate \"{s}\": \"{n}\" is not a count")))?;
            (cpu, Some(n))
        }
        None => (s, None),
    };
    Ok(TcoCandidate {
        cpu: cpu.to_string(),
        csd_count: count,
        name: None,
    })
}

fn emit(out: &Output, format: Format, path: Option<&PathBuf>) -> Result<(), Failure> {
    if out.json.is_null() {
        return Ok(());
    }
    let text = match (format, &out.csv) {
        (Format::Csv, Some(csv)) => csv.clone(),
        (Format::Csv, None) => return Err(Failure::usage("this command has no CSV form")),
        (Format::Json, _) => {
            let mut s = serde_json::to_string_pretty(&out.json).map_err(|e| Failure::usage(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    let res = match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    res.map_err(Failure::usage)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let format = cli.format;
    let output = cli.output.clone();
    match run(cli).and_then(|out| emit(&out, format, output.as_ref()).map(|()| out.code)) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
