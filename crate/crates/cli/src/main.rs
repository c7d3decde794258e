//! Command-line surface of the engine.
//!
//! Subcommands: `validate <file>`, `classify <file> [--taxonomy ...]
//! [--tol X] [--json|--text]`, `catalog list`, `catalog run <name>
//! [--param k=v]`, `selftest`.
//!
//! Exit codes: 0 success, 2 validation failure, 3 internal identity
//! tripwire, 64 usage error, 66 input file not found.

mod geometry;
mod jsonout;
mod pipeline;

use std::process::ExitCode;

use riemgeo::catalog::{catalog_load, describe, ParamValue, Params, CATALOG_NAMES};
use riemgeo::selftest::run_selftest;

use jsonout::Json;
use pipeline::{PipelineOutput, PipelineStatus};

const EXIT_OK: u8 = 0;
const EXIT_VALIDATION: u8 = 2;
const EXIT_TRIPWIRE: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_NO_INPUT: u8 = 66;

const USAGE: &str = "\
usage: riemgeo <command> [options]

commands:
  validate <file>                     parse and validate a geometry file
  classify <file> [--taxonomy on3|gh|acms] [--tol X] [--json|--text]
                                      run the full pipeline on a geometry file
  catalog list                        list the built-in example geometries
  catalog run <name> [--param k=v]... [--tol X] [--json|--text]
                                      run the pipeline on a catalog entry
  selftest                            run every identity suite

The RIEMGEO_TOL environment variable overrides the default relative
membership tolerance (1e-8) when no --tol is given.
";

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    eprint!("{USAGE}");
    ExitCode::from(EXIT_USAGE)
}

struct Flags {
    taxonomy: Option<String>,
    tol: Option<f64>,
    json: bool,
    params: Params,
}

fn parse_flags(args: &[String], allow_params: bool) -> Result<Flags, String> {
    let mut flags = Flags { taxonomy: None, tol: None, json: true, params: Params::new() };
    let mut i = 0;
    while i < args.len() {
        match args[i].as_str() {
            "--taxonomy" => {
                i += 1;
                let v = args.get(i).ok_or("--taxonomy needs a value")?;
                flags.taxonomy = Some(v.clone());
            }
            "--tol" => {
                i += 1;
                let v = args.get(i).ok_or("--tol needs a value")?;
                let t: f64 = v.parse().map_err(|_| format!("invalid tolerance `{v}`"))?;
                flags.tol = Some(t);
            }
            "--json" => flags.json = true,
            "--text" => flags.json = false,
            "--param" if allow_params => {
                i += 1;
                let v = args.get(i).ok_or("--param needs k=v")?;
                let (k, val) = v.split_once('=').ok_or(format!("invalid --param `{v}`, expected k=v"))?;
                let pv = match val.parse::<f64>() {
                    Ok(x) => ParamValue::Number(x),
                    Err(_) => ParamValue::Text(val.to_string()),
                };
                flags.params.insert(k.to_string(), pv);
            }
            other => return Err(format!("unknown flag `{other}`")),
        }
        i += 1;
    }
    Ok(flags)
}

fn read_file(path: &str) -> Result<String, ExitCode> {
    match std::fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            eprintln!("error: input file `{path}` not found");
            Err(ExitCode::from(EXIT_NO_INPUT))
        }
        Err(e) => {
            eprintln!("error: cannot read `{path}`: {e}");
            Err(ExitCode::from(EXIT_NO_INPUT))
        }
    }
}

fn emit(out: &PipelineOutput, json: bool) -> ExitCode {
    if json {
        println!("{}", out.report.to_canonical_string());
    } else {
        print_text_summary(&out.report);
    }
    match &out.status {
        PipelineStatus::Ok => ExitCode::from(EXIT_OK),
        PipelineStatus::ValidationFailure(msg) => {
            eprintln!("validation failure: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        PipelineStatus::Tripwire(msg) => {
            eprintln!("internal tripwire: {msg}");
            ExitCode::from(EXIT_TRIPWIRE)
        }
    }
}

fn print_text_summary(report: &Json) {
    let Json::Obj(map) = report else {
        println!("(no report)");
        return;
    };
    if let Some(Json::Str(status)) = map.get("status") {
        println!("status: {status}");
    }
    if let Some(Json::Obj(cls)) = map.get("classification") {
        for (tax, body) in cls {
            if let Json::Obj(b) = body {
                if let Some(Json::Arr(m)) = b.get("membership") {
                    let labels: Vec<String> = m
                        .iter()
                        .map(|j| match j {
                            Json::Str(s) => s.clone(),
                            _ => String::new(),
                        })
                        .collect();
                    let strict = matches!(b.get("strict"), Some(Json::Bool(true)));
                    println!(
                        "{tax}: membership [{}]{}",
                        labels.join(", "),
                        if strict { " (strict)" } else { "" }
                    );
                }
                if let Some(Json::Arr(named)) = b.get("named_classes") {
                    let labels: Vec<String> = named
                        .iter()
                        .filter_map(|j| match j {
                            Json::Str(s) => Some(s.clone()),
                            _ => None,
                        })
                        .collect();
                    println!("  named: {}", labels.join("; "));
                }
            }
        }
    }
    if let Some(Json::Bool(ok)) = map.get("classification_cross_check") {
        println!("dual-route cross-check: {}", if *ok { "agree" } else { "DISAGREE" });
    }
    if let Some(Json::Obj(f)) = map.get("special_flags") {
        let mut parts = Vec::new();
        for (k, v) in f {
            match v {
                Json::Bool(true) => parts.push(k.clone()),
                Json::Num(x) => parts.push(format!("{k}={x:.6}")),
                _ => {}
            }
        }
        println!("special: {}", parts.join(", "));
    }
    if let Some(Json::Obj(q)) = map.get("qr_algebra") {
        if let Some(Json::Bool(true)) = q.get("applicable") {
            let qra = matches!(q.get("is_qra"), Some(Json::Bool(true)));
            println!("qr-algebra: applicable, QRA = {qra}");
        }
    }
}

fn cmd_validate(path: &str) -> ExitCode {
    let text = match read_file(path) {
        Ok(t) => t,
        Err(code) => return code,
    };
    match geometry::parse_geometry(&text) {
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Ok(gf) => {
            let diag = riemgeo::lie::validate_lie(&gf.model);
            if !diag.passes() {
                eprintln!(
                    "error: structure constants fail validation (antisymmetry {:.3e}, Jacobi {:.3e})",
                    diag.antisymmetry, diag.jacobi
                );
                return ExitCode::from(EXIT_VALIDATION);
            }
            match riemgeo::structures::validate_structure(&gf.structure, gf.model.frame()) {
                Ok(_) => {
                    println!(
                        "valid: dim {}, structure {}, Jacobi residual {:.3e}",
                        gf.dim,
                        gf.structure.kind(),
                        diag.jacobi
                    );
                    ExitCode::from(EXIT_OK)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_VALIDATION)
                }
            }
        }
    }
}

fn cmd_classify(path: &str, flags: &Flags) -> ExitCode {
    let text = match read_file(path) {
        Ok(t) => t,
        Err(code) => return code,
    };
    match geometry::parse_geometry(&text) {
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Ok(mut gf) => {
            if flags.taxonomy.is_some() {
                gf.taxonomy = flags.taxonomy.clone();
            }
            if flags.tol.is_some() {
                gf.tol_rel = flags.tol;
            }
            let out = pipeline::run_geometry_file(&gf);
            emit(&out, flags.json)
        }
    }
}

fn cmd_catalog_run(name: &str, flags: &Flags) -> ExitCode {
    match catalog_load(name, &flags.params) {
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Ok(entry) => {
            let out = pipeline::run_catalog_entry(&entry, flags.tol);
            emit(&out, flags.json)
        }
    }
}

fn cmd_selftest() -> ExitCode {
    let results = run_selftest();
    let mut failed = 0usize;
    for r in &results {
        println!("{} {} -- {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        if !r.passed {
            failed += 1;
        }
    }
    println!("selftest: {} checks, {} failed", results.len(), failed);
    if failed == 0 {
        ExitCode::from(EXIT_OK)
    } else {
        ExitCode::from(EXIT_TRIPWIRE)
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(cmd) = args.first() else {
        return usage_error("missing command");
    };
    match cmd.as_str() {
        "validate" => {
            let Some(path) = args.get(1) else {
                return usage_error("validate needs a file");
            };
            if args.len() > 2 {
                return usage_error("validate takes exactly one argument");
            }
            cmd_validate(path)
        }
        "classify" => {
            let Some(path) = args.get(1) else {
                return usage_error("classify needs a file");
            };
            match parse_flags(&args[2..], false) {
                Ok(flags) => cmd_classify(path, &flags),
                Err(e) => usage_error(&e),
            }
        }
        "catalog" => match args.get(1).map(|s| s.as_str()) {
            Some("list") => {
                for name in CATALOG_NAMES {
                    println!("{name}: {}", describe(name).unwrap_or(""));
                }
                ExitCode::from(EXIT_OK)
            }
            Some("run") => {
                let Some(name) = args.get(2) else {
                    return usage_error("catalog run needs an entry name");
                };
                match parse_flags(&args[3..], true) {
                    Ok(flags) => cmd_catalog_run(name, &flags),
                    Err(e) => usage_error(&e),
                }
            }
            _ => usage_error("catalog needs `list` or `run <name>`"),
        },
        "selftest" => {
            if args.len() > 1 {
                return usage_error("selftest takes no arguments");
            }
            cmd_selftest()
        }
        other => usage_error(&format!("unknown command `{other}`")),
    }
}
