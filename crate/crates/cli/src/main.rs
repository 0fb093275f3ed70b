//! Command-line front end: load operator spec files, run torsion /
//! invariant / classification checks, run the catalog battery, and emit
//! deterministic reports.
//!
//! Exit codes: 0 all checks passed (warnings allowed), 1 at least one check
//! failed, 2 input or usage error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};

use nijenhuis_core::catalog::{instantiate, FamilyId, Sign};
use nijenhuis_core::expr::{parse_expr, ParamEnv};
use nijenhuis_core::linalg::charpoly;
use nijenhuis_core::nijenhuis::{FieldError, PrescribedField};
use nijenhuis_core::report::{digest_bytes, digest_str, CheckRecord, Report, Status};
use nijenhuis_core::sample::{sample_points, SampleBox};
use nijenhuis_core::singularity::{classify_point, ClassifyOptions};
use nijenhuis_core::specfile::load_operator_spec;
use nijenhuis_core::tolerances;
use nijenhuis_core::verify::{run_family_battery, torsion_records, BatteryOptions};
use nijenhuis_core::LinalgError;

#[derive(Parser)]
#[command(
    name = "nijenhuis",
    version,
    about = "Verification toolkit for Nijenhuis operator fields"
)]
struct Cli {
    /// Write the report to a file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,

    /// Points per sampled sweep.
    #[arg(long, global = true, default_value_t = 200)]
    points: usize,

    /// Offset into the low-discrepancy sample sequence.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,

    /// Base torsion tolerance (scale-aware).
    #[arg(long, global = true, default_value_t = tolerances::TORSION_EPS_BASE)]
    tol: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Structured,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SignChoice {
    Both,
    Upper,
    Lower,
}

#[derive(Subcommand)]
enum Command {
    /// Check that an operator field has vanishing torsion (both
    /// implementations) over a sampled sweep of its domain.
    Torsion {
        /// Operator spec file (TOML).
        spec: PathBuf,
    },
    /// Characteristic coefficients, their Jacobian rank, and the covector
    /// identity at a point.
    Invariants {
        spec: PathBuf,
        /// Evaluation point, comma-separated: "0.1,0.2,0.3".
        #[arg(long)]
        point: String,
    },
    /// Classify the differential singularity of the invariant map at a point.
    Classify {
        spec: PathBuf,
        #[arg(long)]
        point: String,
    },
    /// Run the full verification battery of catalogued families.
    Catalog {
        /// Family id (T2C1, T2C2, T2C3, T3, T3R, T4, T5) or "all".
        #[arg(long, default_value = "all")]
        family: String,
        /// Instantiate one parameter set (e.g. "c=2" or "alpha=1,gamma=-1")
        /// instead of the default sweep.
        #[arg(long)]
        params: Option<String>,
        /// Which sign choices to run for signed families.
        #[arg(long, value_enum, default_value_t = SignChoice::Both)]
        signs: SignChoice,
    },
    /// Build the operator prescribed by coefficient functions
    /// (J⁻¹ S_χ J) at a point, with round-trip and torsion checks.
    Construct {
        /// Coefficient expressions σ1, σ2, σ3 (repeat the flag).
        #[arg(long = "sigma", required = true, num_args = 1)]
        sigma: Vec<String>,
        /// Construction point, comma-separated.
        #[arg(long)]
        at: String,
        /// Variable names (default "x,y,z" truncated to the σ count).
        #[arg(long)]
        vars: Option<String>,
        /// Parameter bindings, e.g. "c=1,alpha=0.5".
        #[arg(long)]
        params: Option<String>,
    },
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl<E: std::error::Error> From<E> for UsageError {
    fn from(e: E) -> Self {
        let mut msg = e.to_string();
        let mut src = e.source();
        while let Some(s) = src {
            msg.push_str(&format!(": {s}"));
            src = s.source();
        }
        UsageError(msg)
    }
}

fn parse_point(text: &str) -> Result<Vec<f64>, UsageError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| UsageError(format!("cannot parse coordinate `{t}`")))
        })
        .collect()
}

fn parse_params(text: &str) -> Result<ParamEnv, UsageError> {
    let mut env = ParamEnv::new();
    for item in text.split(',').filter(|s| !s.trim().is_empty()) {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| UsageError(format!("expected name=value, got `{item}`")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| UsageError(format!("cannot parse value of `{name}`")))?;
        env.set(name.trim(), v);
    }
    Ok(env)
}

fn emit(cli: &Cli, report: &Report) -> Result<i32, UsageError> {
    let text = match cli.format {
        Format::Human => report.render_human(),
        Format::Structured => report.to_toml(),
    };
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(report.exit_code())
}

fn run(cli: &Cli) -> Result<i32, UsageError> {
    match &cli.command {
        Command::Torsion { spec } => {
            let (field, bytes) = load_operator_spec(spec)?;
            let records = torsion_records("operator", &field, cli.points, cli.seed, cli.tol)?;
            let report = Report::new(digest_bytes(&bytes), records);
            emit(cli, &report)
        }
        Command::Invariants { spec, point } => {
            let (field, bytes) = load_operator_spec(spec)?;
            let p = parse_point(point)?;
            if p.len() != field.dim() {
                return Err(UsageError(format!(
                    "point has {} coordinates, operator dimension is {}",
                    p.len(),
                    field.dim()
                )));
            }
            let inv = field.invariants_at(&p).map_err(UsageError::from)?;
            let mut diagnostics = vec![format!(
                "sigma = ({})",
                inv.sigma
                    .coeffs
                    .iter()
                    .map(|v| format!("{v:.12}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            )];
            for i in 0..inv.dim() {
                diagnostics.push(format!(
                    "grad sigma{} = ({})",
                    i + 1,
                    inv.jacobian
                        .row(i)
                        .iter()
                        .map(|v| format!("{v:.12}"))
                        .collect::<Vec<_>>()
                        .join(", ")
                ));
            }
            let details = inv.jacobian.rank_details(tolerances::RANK_TOL_REL);
            diagnostics.push(format!("rank(dPhi) = {}", details.rank));
            let mut records = vec![CheckRecord::info("invariants/values", diagnostics)];
            let residual = field
                .covector_identity_residual(&p)
                .map_err(UsageError::from)?;
            records.push(CheckRecord::residual_check(
                "invariants/covector-identity",
                residual,
                tolerances::COVECTOR_IDENTITY,
                1,
            ));
            let report = Report::new(digest_bytes(&bytes), records);
            emit(cli, &report)
        }
        Command::Classify { spec, point } => {
            let (field, bytes) = load_operator_spec(spec)?;
            let p = parse_point(point)?;
            if p.len() != field.dim() {
                return Err(UsageError(format!(
                    "point has {} coordinates, operator dimension is {}",
                    p.len(),
                    field.dim()
                )));
            }
            let rep = classify_point(&field, &p, &ClassifyOptions::default())
                .map_err(UsageError::from)?;
            let mut diagnostics = vec![
                format!("regime = {}", rep.regime),
                format!("rank = {}", rep.rank),
            ];
            if let Some((i, j)) = rep.independent_pair {
                diagnostics.push(format!("independent pair = (sigma{}, sigma{})", i + 1, j + 1));
            }
            if let Some(m) = &rep.morse {
                diagnostics.push(format!(
                    "curve tangent = ({})",
                    m.curve_tangent
                        .iter()
                        .map(|v| format!("{v:.9}"))
                        .collect::<Vec<_>>()
                        .join(", ")
                ));
                diagnostics.push(format!("h1 = {:.9e}, h2 = {:.9}", m.h1, m.h2));
            }
            diagnostics.extend(rep.diagnostics.clone());
            let records = vec![CheckRecord::info("classify/regime", diagnostics)];
            let report = Report::new(digest_bytes(&bytes), records);
            emit(cli, &report)
        }
        Command::Catalog {
            family,
            params,
            signs,
        } => {
            let opts = BatteryOptions {
                points: cli.points,
                seed: cli.seed,
                torsion_tol: cli.tol,
                ..BatteryOptions::default()
            };
            let ids: Vec<FamilyId> = if family == "all" {
                FamilyId::ALL.to_vec()
            } else {
                vec![FamilyId::from_str(family)?]
            };
            let records = match params {
                None => {
                    let mut recs = Vec::new();
                    for id in &ids {
                        for spec in nijenhuis_core::catalog::default_instances(*id)? {
                            if let (Some(s), SignChoice::Upper) = (spec.sign, *signs) {
                                if s != Sign::Upper {
                                    continue;
                                }
                            }
                            if let (Some(s), SignChoice::Lower) = (spec.sign, *signs) {
                                if s != Sign::Lower {
                                    continue;
                                }
                            }
                            recs.extend(run_family_battery(&spec, &opts)?);
                        }
                        if *id == FamilyId::T5 {
                            recs.push(CheckRecord::info(
                                "T5/diagnostic/nonsmooth-branch".to_string(),
                                nijenhuis_core::catalog::t5_branch_blowup_diagnostic()?,
                            ));
                        }
                    }
                    recs
                }
                Some(ptext) => {
                    let env = parse_params(ptext)?;
                    let sign_list: &[Option<Sign>] = match signs {
                        SignChoice::Both => &[Some(Sign::Upper), Some(Sign::Lower)],
                        SignChoice::Upper => &[Some(Sign::Upper)],
                        SignChoice::Lower => &[Some(Sign::Lower)],
                    };
                    let mut recs = Vec::new();
                    for id in &ids {
                        if id.has_sign() {
                            for s in sign_list {
                                let spec = instantiate(*id, &env, *s)?;
                                recs.extend(run_family_battery(&spec, &opts)?);
                            }
                        } else {
                            let spec = instantiate(*id, &env, None)?;
                            recs.extend(run_family_battery(&spec, &opts)?);
                        }
                    }
                    recs
                }
            };
            let config = format!(
                "catalog:family={family};params={};signs={};points={};seed={};tol={:e}",
                params.as_deref().unwrap_or("default"),
                match signs {
                    SignChoice::Both => "both",
                    SignChoice::Upper => "upper",
                    SignChoice::Lower => "lower",
                },
                cli.points,
                cli.seed,
                cli.tol
            );
            let report = Report::new(digest_str(&config), records);
            emit(cli, &report)
        }
        Command::Construct {
            sigma,
            at,
            vars,
            params,
        } => {
            let p = parse_point(at)?;
            let n = sigma.len();
            if p.len() != n {
                return Err(UsageError(format!(
                    "point has {} coordinates but {} coefficients were given",
                    p.len(),
                    n
                )));
            }
            let var_names: Vec<String> = match vars {
                Some(v) => v.split(',').map(|s| s.trim().to_string()).collect(),
                None => ["x", "y", "z", "u", "v", "w"][..n]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
            };
            if var_names.len() != n {
                return Err(UsageError(format!(
                    "{} variables for {} coefficients",
                    var_names.len(),
                    n
                )));
            }
            let env = match params {
                Some(t) => parse_params(t)?,
                None => ParamEnv::new(),
            };
            let param_names: Vec<String> = env.names().map(String::from).collect();
            let exprs = sigma
                .iter()
                .map(|t| parse_expr(t, &var_names, &param_names))
                .collect::<Result<Vec<_>, _>>()?;
            let field = PrescribedField::new(exprs, var_names, env)?;

            let config = format!("construct:sigma={};at={at};params={:?}", sigma.join("|"), params);
            let report = match field.matrix_at(&p) {
                Err(FieldError::Linalg(LinalgError::Singular { pivot, threshold })) => {
                    // The construction degenerates exactly at differential
                    // singularities of the prescribed coefficients; report the
                    // Jacobian rank alongside the failure.
                    let inv = field.invariants_at(&p).map_err(UsageError::from)?;
                    let details = inv.jacobian.rank_details(tolerances::RANK_TOL_REL);
                    let rec = CheckRecord {
                        id: "construct/matrix".into(),
                        status: Status::Fail,
                        points: Some(1),
                        residual: None,
                        threshold: None,
                        diagnostics: vec![
                            format!(
                                "coefficient Jacobian is singular at the point (pivot {pivot:.3e} <= {threshold:.3e})"
                            ),
                            format!("rank(dPhi) = {} < {}", details.rank, n),
                            "the companion-conjugation formula applies only where the coefficients are functionally independent".into(),
                        ],
                    };
                    Report::new(digest_str(&config), vec![rec])
                }
                Err(e) => return Err(UsageError::from(e)),
                Ok(l) => {
                    let mut records = Vec::new();
                    let mut diagnostics = Vec::new();
                    for i in 0..n {
                        diagnostics.push(format!(
                            "L[{i}] = ({})",
                            (0..n)
                                .map(|j| format!("{:.12}", l.at(i, j)))
                                .collect::<Vec<_>>()
                                .join(", ")
                        ));
                    }
                    records.push(CheckRecord::info("construct/matrix", diagnostics));

                    let cp = charpoly(&l);
                    let sigma_vals = field.invariants_at(&p).map_err(UsageError::from)?.sigma;
                    let mut roundtrip = 0.0f64;
                    for (a, b) in cp.coeffs.iter().zip(&sigma_vals.coeffs) {
                        roundtrip = roundtrip.max((a - b).abs() / (1.0 + b.abs()));
                    }
                    records.push(
                        CheckRecord::residual_check(
                            "construct/roundtrip",
                            roundtrip,
                            tolerances::CONSTRUCT_ROUNDTRIP,
                            1,
                        )
                        .with_diagnostic(format!(
                            "charpoly of constructed operator = ({})",
                            cp.coeffs
                                .iter()
                                .map(|v| format!("{v:.12}"))
                                .collect::<Vec<_>>()
                                .join(", ")
                        )),
                    );

                    // Torsion sampled in a small box around the point.
                    let half = 0.05;
                    let bx = SampleBox::new(
                        p.iter().map(|x| x - half).collect(),
                        p.iter().map(|x| x + half).collect(),
                    );
                    let pts = sample_points(
                        &bx,
                        &[],
                        &ParamEnv::new(),
                        20,
                        cli.seed,
                        tolerances::EXCLUSION_MARGIN,
                    )
                    .map_err(UsageError::from)?;
                    let mut worst = 0.0f64;
                    let mut skipped = 0usize;
                    for q in &pts {
                        match (field.torsion_at(q), field.scale_at(q)) {
                            (Ok(t), Ok(scale)) => {
                                worst = worst.max(t.max_abs() / (1.0 + scale));
                            }
                            _ => skipped += 1,
                        }
                    }
                    let mut rec = CheckRecord::residual_check(
                        "construct/torsion-nearby",
                        worst,
                        tolerances::CONSTRUCT_TORSION,
                        pts.len() - skipped,
                    );
                    if skipped > 0 {
                        rec = rec.with_diagnostic(format!(
                            "{skipped} nearby points skipped (construction degenerate there)"
                        ));
                    }
                    records.push(rec);
                    Report::new(digest_str(&config), records)
                }
            };
            emit(cli, &report)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
