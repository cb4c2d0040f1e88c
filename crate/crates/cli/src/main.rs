//! `sympinv` command-line frontend.
//!
//! Exit codes: 0 success/true, 1 clean false, 2 infeasible, 3 table
//! mismatch, 4 input error, 5 length bound exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sympinv::certs::{extract_certificate, verify, Certificate, CertificateJson};
use sympinv::construct::{cell_fixture, named_fixture, CellKind, CellSpec};
use sympinv::gfpoly::{find_even_irreducible, find_irreducible_const};
use sympinv::linalg::MatJson;
use sympinv::reflengine::{census_with, compare_table2, table2_report, CensusOptions, InvolutionTable, LengthOracle};
use sympinv::sympcore::{SPair, DEFAULT_CAP};
use sympinv::wall::{is_conjugate, profile};
use sympinv::{Error, Field, Mat, Poly};

#[derive(Parser)]
#[command(name = "sympinv", version, about = "Involution decompositions in symplectic groups over prime fields")]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum WallClass {
    Square,
    Nonsquare,
}

#[derive(Subcommand)]
enum Cmd {
    /// Conjugacy classes of Sp_n(F_p) with their reflectional lengths.
    Census {
        #[arg(long)]
        p: u32,
        /// Dimension 2m.
        #[arg(long)]
        n: usize,
        /// Check the Sp_4(F_3) classification table.
        #[arg(long)]
        compare_table2: bool,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u128,
        #[arg(long, default_value_t = 6)]
        max_k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reflectional length of a matrix.
    Rl {
        matrix: PathBuf,
        #[arg(long, default_value_t = 6)]
        max_k: usize,
        /// Write a decomposition certificate here.
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Conjugacy invariants of a matrix.
    Profile { matrix: PathBuf },
    /// Exit 0 if the two matrices are conjugate in Sp, 1 otherwise.
    Conj { a: PathBuf, b: PathBuf },
    /// Check a certificate; exit 1 with the first failing clause.
    Verify { certificate: PathBuf },
    /// Polynomial searches.
    Poly {
        #[command(subcommand)]
        cmd: PolyCmd,
    },
    /// Emit a fixture matrix, by catalog name or as an indecomposable cell.
    Fixture {
        #[command(subcommand)]
        cmd: FixtureCmd,
    },
}

#[derive(Subcommand)]
enum PolyCmd {
    /// Irreducible of the given degree with prescribed constant term.
    Irr {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        deg: usize,
        #[arg(long = "const", allow_hyphen_values = true)]
        constant: i64,
    },
    /// Even irreducible of the given degree.
    Even {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        deg: usize,
        #[arg(long)]
        avoid_t2_plus_1: bool,
    },
    /// Factor a polynomial given as a lowest-first coefficient array.
    Factor {
        #[arg(long)]
        p: u32,
        coeffs: String,
    },
}

#[derive(Subcommand)]
enum FixtureCmd {
    /// A catalog fixture such as "U_S(S=diag(1,-1),p=3)".
    Named {
        name: String,
        /// Also write the construction's involutions (matrix JSON array).
        #[arg(long)]
        involutions: Option<PathBuf>,
    },
    /// An indecomposable cell of type I..VI.
    Cell {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        p: u32,
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        eta: i8,
        /// Lowest-first coefficient array of the irreducible.
        #[arg(long)]
        poly: Option<String>,
        #[arg(long, value_enum)]
        wall: Option<WallClass>,
    },
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::TooLarge { .. } => 2,
            Error::Mismatch(_) => 3,
            Error::Exceeds(_) => 5,
            Error::NotFound(_) | Error::SearchExhausted(_) => 1,
            _ => 4,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn input_error(msg: impl Into<String>) -> Failure {
    Failure { code: 4, msg: msg.into() }
}

type CliResult = Result<u8, Failure>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn read_pair(path: &Path) -> Result<SPair, Failure> {
    let m = Mat::from_json(&read_json::<MatJson>(path)?)?;
    Ok(SPair::new(m)?)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| input_error(format!("{}: {e}", path.display()))),
        None => {
            println!("{}", text.trim_end());
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

fn parse_poly(field: Field, text: &str) -> Result<Poly, Failure> {
    let coeffs: Vec<i64> =
        serde_json::from_str(text).map_err(|e| input_error(format!("bad coefficient array {text:?}: {e}")))?;
    Ok(Poly::new(field, &coeffs))
}

fn poly_json(poly: &Poly) -> String {
    serde_json::json!({ "p": poly.field().p(), "coeffs": poly.coeffs(), "text": poly.to_string() }).to_string()
}

fn run(cli: Cli) -> CliResult {
    match cli.cmd {
        Cmd::Census { p, n, compare_table2: compare, format, cap, max_k, seed, out } => {
            if compare && (p != 3 || n != 4) {
                return Err(input_error("--compare-table2 requires --p 3 --n 4"));
            }
            let opts = CensusOptions { cap, max_k, seed, ..CensusOptions::default() };
            let table = census_with(n, p, &opts)?;
            let text = match format {
                Format::Table => table.to_text(),
                Format::Json => to_json(&table.to_json()),
            };
            if compare {
                if let Some(path) = &out {
                    emit(&text, Some(path))?;
                }
                let report = table2_report(&table);
                print!("{}", report.render());
                compare_table2(&table)?;
                Ok(0)
            } else {
                emit(&text, out.as_deref())?;
                Ok(0)
            }
        }
        Cmd::Rl { matrix, max_k, certificate } => {
            let pair = read_pair(&matrix)?;
            let table = InvolutionTable::for_group(pair.dim(), pair.field().p())?;
            let oracle = LengthOracle::new(&table);
            let k = oracle.length(&pair, max_k)?;
            if let Some(path) = certificate {
                let cert = extract_certificate(&pair, &oracle, max_k)?;
                emit(&to_json(&cert.to_json()), Some(&path))?;
            }
            println!("{k}");
            Ok(0)
        }
        Cmd::Profile { matrix } => {
            let pair = read_pair(&matrix)?;
            println!("{}", to_json(&profile(&pair).to_json()));
            Ok(0)
        }
        Cmd::Conj { a, b } => {
            let (a, b) = (read_pair(&a)?, read_pair(&b)?);
            if a.dim() != b.dim() {
                return Err(input_error(format!("dimensions differ: {} vs {}", a.dim(), b.dim())));
            }
            let same = is_conjugate(&a, &b)?;
            println!("{same}");
            Ok(if same { 0 } else { 1 })
        }
        Cmd::Verify { certificate } => {
            let cert = Certificate::from_json(&read_json::<CertificateJson>(&certificate)?)?;
            match verify(&cert) {
                Ok(()) => {
                    println!("ok ({} factors)", cert.len());
                    Ok(0)
                }
                Err(clause) => {
                    println!("fail: {clause}");
                    Ok(1)
                }
            }
        }
        Cmd::Poly { cmd } => match cmd {
            PolyCmd::Irr { p, deg, constant } => {
                let field = Field::new(p)?;
                println!("{}", poly_json(&find_irreducible_const(field, deg, field.elem(constant))?));
                Ok(0)
            }
            PolyCmd::Even { p, deg, avoid_t2_plus_1 } => {
                let field = Field::new(p)?;
                println!("{}", poly_json(&find_even_irreducible(field, deg, avoid_t2_plus_1)?));
                Ok(0)
            }
            PolyCmd::Factor { p, coeffs } => {
                let field = Field::new(p)?;
                let poly = parse_poly(field, &coeffs)?;
                let factors: Vec<serde_json::Value> = poly
                    .factorize()?
                    .iter()
                    .map(|(g, e)| serde_json::json!({ "coeffs": g.coeffs(), "text": g.to_string(), "mult": e }))
                    .collect();
                println!("{}", serde_json::Value::Array(factors));
                Ok(0)
            }
        },
        Cmd::Fixture { cmd } => match cmd {
            FixtureCmd::Named { name, involutions } => {
                let fx = named_fixture(&name)?;
                if let Some(path) = involutions {
                    let list: Vec<MatJson> = fx.involutions.iter().map(Mat::to_json).collect();
                    emit(&to_json(&list), Some(&path))?;
                }
                println!("{}", to_json(&fx.pair.u.to_json()));
                Ok(0)
            }
            FixtureCmd::Cell { kind, p, n, eta, poly, wall } => {
                let field = Field::new(p)?;
                let spec = CellSpec {
                    kind: CellKind::from_roman(&kind)?,
                    poly: poly.map(|s| parse_poly(field, &s)).transpose()?,
                    n,
                    eta,
                    wall_disc_square: wall.map(|w| matches!(w, WallClass::Square)),
                };
                println!("{}", to_json(&cell_fixture(field, &spec)?.u.to_json()));
                Ok(0)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
