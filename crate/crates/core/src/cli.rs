//! Command-line driver: every pipeline behind one binary, emitting
//! per-bidegree basis tables and verification reports as static text,
//! JSON, or CSV. Exit codes: 0 success, 1 verification failure, 2 config
//! error.

use crate::bidegree::Window;
use crate::errors::{EngineError, Result};
use crate::fieldmodel::{FieldConfig, MilnorKModel};
use crate::flag::{load_group_config, load_group_datum, GroupDatum};
use crate::module::BigradedModule;
use crate::report::run_all_checks;
use crate::witt::{witt_of, WittTarget};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "motivic",
    about = "Exact computations of motivic cohomology, cobordism and Witt groups of Rost motives and twisted flag varieties",
    version
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum Theory {
    Ah,
    Ak,
    K1,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum WittTargetArg {
    Rost,
    SplitFlag,
    TwistedFlag,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Cohomology of the Cech object of a pure symbol.
    Chi {
        #[arg(long, default_value = "real")]
        field: String,
        #[arg(long, default_value_t = 2)]
        n: u32,
        #[arg(long, default_value_t = 24)]
        fmax: i64,
        #[arg(long)]
        smin: Option<i64>,
        #[arg(long)]
        smax: Option<i64>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// The Rost motive: iterated stages vs closed form, Chow and etale
    /// realizations.
    Rost {
        #[arg(long, default_value = "real")]
        field: String,
        #[arg(long, default_value_t = 2)]
        n: u32,
        #[arg(long, default_value_t = 40)]
        fmax: i64,
        #[arg(long)]
        smin: Option<i64>,
        #[arg(long)]
        smax: Option<i64>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Cobordism spectral sequences (full, truncated, or first Morava).
    Ahss {
        #[arg(long, default_value = "localfield:2:3")]
        field: String,
        #[arg(long, default_value_t = 2)]
        n: u32,
        #[arg(long, value_enum, default_value_t = Theory::Ah)]
        theory: Theory,
        /// Group label for the flag-variety version (with --theory k1 or
        /// when assembling over a flag).
        #[arg(long)]
        group: Option<String>,
        #[arg(long)]
        prime: Option<u32>,
        #[arg(long, default_value_t = 30)]
        fmax: i64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Twisted flag variety: motivic cohomology, Chow and etale tables.
    Flag {
        #[arg(long)]
        group: Option<String>,
        #[arg(long)]
        prime: Option<u32>,
        /// JSON datum path (alternative to a catalog label).
        #[arg(long)]
        datum: Option<String>,
        #[arg(long, default_value = "real")]
        field: String,
        #[arg(long, default_value_t = 26)]
        fmax: i64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Witt groups over the reals.
    Witt {
        #[arg(long, value_enum, default_value_t = WittTargetArg::Rost)]
        target: WittTargetArg,
        #[arg(long)]
        group: Option<String>,
        /// JSON datum path with explicit polynomials.
        #[arg(long)]
        datum: Option<String>,
        /// Use the shipped explicit sample base ring.
        #[arg(long, default_value_t = false)]
        sample_base: bool,
        /// Switch the extended differential off.
        #[arg(long, default_value_t = false)]
        no_assumption: bool,
        #[arg(long, default_value_t = 22)]
        fmax: i64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Run every verification check and print the pass/fail matrix.
    VerifyAll {
        #[arg(long, default_value = "desk")]
        profile: String,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

fn parse_field(spec: &str, window: &Window) -> Result<MilnorKModel> {
    if spec == "real" {
        return Ok(MilnorKModel::real_model(&window.padded(0, 120, 0, 120)));
    }
    if let Some(rest) = spec.strip_prefix("localfield:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 2 {
            return Err(EngineError::Config(
                "expected localfield:<n>:<p> (example: localfield:2:3)".into(),
            ));
        }
        let n: u32 = parts[0].parse().map_err(|_| EngineError::Config("bad n".into()))?;
        let p: u32 = parts[1].parse().map_err(|_| EngineError::Config("bad p".into()))?;
        return MilnorKModel::exterior_local_model(n, p);
    }
    if let Some(path) = spec.strip_prefix("custom:") {
        let text = std::fs::read_to_string(path)?;
        let cfg: FieldConfig = serde_json::from_str(&text)?;
        return MilnorKModel::custom_model(&cfg);
    }
    Err(EngineError::Config(format!(
        "unknown field `{spec}`; use real, localfield:<n>:<p>, or custom:<path>"
    )))
}

fn load_datum(group: &Option<String>, prime: Option<u32>, datum: &Option<String>) -> Result<GroupDatum> {
    if let Some(path) = datum {
        let text = std::fs::read_to_string(path)?;
        return load_group_config(&text, 64);
    }
    let label = group
        .as_deref()
        .ok_or_else(|| EngineError::Config("need --group or --datum".into()))?;
    let p = prime.unwrap_or(2);
    load_group_datum(label, p)
}

fn module_table(m: &BigradedModule) -> String {
    let mut out = String::new();
    out.push_str(&format!("window {}   total rank {}\n", m.window, m.total_rank()));
    out.push_str("  (f,s)      w   d   basis\n");
    for deg in m.degrees() {
        let names: Vec<String> = m.at(deg).iter().map(|v| {
            let anns: Vec<String> = v.ann.iter().map(|a| a.to_string()).collect();
            if anns.is_empty() {
                v.label.to_string()
            } else {
                format!("{} [{}]", v.label, anns.join(","))
            }
        }).collect();
        out.push_str(&format!(
            "  ({:>3},{:>3}) {:>3} {:>3}   {}\n",
            deg.f,
            deg.s,
            deg.w(),
            deg.d(),
            names.join(", ")
        ));
    }
    out
}

fn module_csv(m: &BigradedModule) -> String {
    let mut out = String::from("name,f,s,annotations\n");
    for v in m.iter() {
        let anns: Vec<String> = v.ann.iter().map(|a| a.to_string()).collect();
        out.push_str(&format!("\"{}\",{},{},\"{}\"\n", v.label, v.deg.f, v.deg.s, anns.join(" ")));
    }
    out
}

fn emit_module(m: &BigradedModule, format: Format) -> String {
    match format {
        Format::Table => module_table(m),
        Format::Json => m.to_json(),
        Format::Csv => module_csv(m),
    }
}

fn write_artifact(name: &str, content: &str) -> Result<()> {
    if let Ok(dir) = std::env::var("MOTIVIC_ENGINE_OUT") {
        if !dir.is_empty() {
            std::fs::create_dir_all(&dir)?;
            std::fs::write(format!("{dir}/{name}"), content)?;
        }
    }
    Ok(())
}

/// Execute a parsed configuration. Returns the process exit code.
pub fn run(config: RunConfig) -> i32 {
    match dispatch(config) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                EngineError::Config(_) | EngineError::Regime(_) | EngineError::Io(_)
                | EngineError::Json(_) => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(config: RunConfig) -> Result<i32> {
    match config.command {
        Command::Chi { field, n, fmax, smin, smax, format } => {
            let w = Window::new(fmax, smin.unwrap_or(-fmax), smax.unwrap_or(fmax + 10));
            let model = parse_field(&field, &w)?;
            let chi = crate::chi::chi_cohomology(&model, n, &w)?;
            let text = emit_module(&chi.module, format);
            println!("{text}");
            write_artifact("chi.txt", &text)?;
            Ok(0)
        }
        Command::Rost { field, n, fmax, smin, smax, format } => {
            let w = Window::new(fmax, smin.unwrap_or(-(fmax / 2)), smax.unwrap_or(fmax + 10));
            let model = parse_field(&field, &w)?;
            let out = crate::rost::rost_cohomology(&model, n, &w)?;
            let mut text = String::new();
            match format {
                Format::Table => {
                    text.push_str("== cohomology of the Rost motive (iterated = closed form) ==\n");
                    text.push_str(&module_table(&out.module));
                    if !out.ledger.entries.is_empty() {
                        text.push_str("\nintegral-lift ledger:\n");
                        for e in &out.ledger.entries {
                            text.push_str(&format!("  stage {}: {} = {}\n", e.stage, e.class, e.interpretation));
                        }
                    }
                    let chow = crate::rost::chow_of_rost(&out.module, n)?;
                    text.push_str("\nChow diagonal:\n");
                    for c in &chow.classes {
                        text.push_str(&format!(
                            "  {}  (chow degree {}, {})\n",
                            c.name,
                            c.chow_degree,
                            if c.torsion { "p-torsion" } else { "free" }
                        ));
                    }
                }
                Format::Json => text = out.module.to_json(),
                Format::Csv => text = module_csv(&out.module),
            }
            println!("{text}");
            write_artifact("rost.txt", &text)?;
            Ok(0)
        }
        Command::Ahss { field, n, theory, group, prime, fmax, format } => {
            let w = Window::new(fmax, 0, fmax + 4);
            let model = parse_field(&field, &w)?;
            match theory {
                Theory::Ah => {
                    if let Some(label) = &group {
                        let datum = load_datum(&Some(label.clone()), prime, &None)?;
                        let pres = crate::ahss::flag_cobordism(
                            &datum,
                            &model,
                            crate::ahss::TheoryTag::Ah,
                            &w,
                        )?;
                        print_presentation(&pres, format)?;
                    } else {
                        let out = crate::ahss::ah_of_rost(&model, n, &w)?;
                        let text = match format {
                            Format::Json => out.assembled.to_json(),
                            Format::Csv => module_csv(&out.assembled),
                            Format::Table => {
                                let mut t = module_table(&out.assembled);
                                t.push_str("\nrelation ledger (mod I^2):\n");
                                for e in &out.ledger.entries {
                                    t.push_str(&format!("  {}   [{}]\n", e.relation, e.witness));
                                }
                                t
                            }
                        };
                        println!("{text}");
                        write_artifact("ahss.txt", &text)?;
                    }
                }
                Theory::Ak => {
                    let out = crate::ahss::ak_of_rost(&model, n, &w)?;
                    let text = match format {
                        Format::Json => out.direct.to_json(),
                        Format::Csv => module_csv(&out.direct),
                        Format::Table => {
                            let mut t = String::from(
                                "== truncated-coefficient cobordism (two routes agreed) ==\n",
                            );
                            t.push_str(&module_table(&out.direct));
                            t
                        }
                    };
                    println!("{text}");
                    write_artifact("ak.txt", &text)?;
                }
                Theory::K1 => {
                    let datum = load_datum(&group, prime, &None)?;
                    let pres =
                        crate::ahss::flag_cobordism(&datum, &model, crate::ahss::TheoryTag::K1, &w)?;
                    print_presentation(&pres, format)?;
                }
            }
            Ok(0)
        }
        Command::Flag { group, prime, datum, field, fmax, format } => {
            let d = load_datum(&group, prime, &datum)?;
            let w = Window::new(fmax, -(fmax / 2), fmax + 4);
            let model = parse_field(&field, &w)?;
            let out = crate::flag::motivic_of_flag(&d, &model, &w)?;
            let mut text = String::new();
            match format {
                Format::Json => {
                    if let Some(m) = &out.module {
                        text = m.to_json();
                    } else {
                        text = serde_json::to_string_pretty(&out.ranks)?;
                    }
                }
                Format::Csv => {
                    if let Some(m) = &out.module {
                        text = module_csv(m);
                    } else {
                        text.push_str("f,s,rank\n");
                        for (deg, r) in &out.ranks.0 {
                            text.push_str(&format!("{},{},{}\n", deg.f, deg.s, r));
                        }
                    }
                }
                Format::Table => {
                    text.push_str("== twisted flag variety ==\npresentation:\n");
                    for line in &out.presentation {
                        text.push_str(&format!("  {line}\n"));
                    }
                    text.push_str("relation audits:\n");
                    for c in &out.relation_checks {
                        text.push_str(&format!("  {}: {}\n", c.relation, c.verdict));
                    }
                    let et = crate::flag::etale_of_flag(&d, &model, fmax)?;
                    text.push_str(&format!("\netale: {}\n", et.presentation));
                    if let Some(m) = &out.module {
                        text.push_str("\nadditive module:\n");
                        text.push_str(&module_table(m));
                    } else {
                        text.push_str("\nadditive ranks (module too large to list):\n");
                        for (deg, r) in &out.ranks.0 {
                            text.push_str(&format!("  {deg}: {r}\n"));
                        }
                    }
                }
            }
            println!("{text}");
            write_artifact("flag.txt", &text)?;
            Ok(0)
        }
        Command::Witt { target, group, datum, sample_base, no_assumption, fmax, format } => {
            let w = Window::new(fmax, -(fmax / 2), fmax + 4);
            let tgt = match target {
                WittTargetArg::Rost => WittTarget::Rost,
                WittTargetArg::SplitFlag | WittTargetArg::TwistedFlag => {
                    let d = if sample_base {
                        load_group_config(crate::flag::G2_EXPLICIT_SAMPLE, fmax / 2 + 2)?
                    } else {
                        load_datum(&group, Some(2), &datum)?
                    };
                    if matches!(target, WittTargetArg::SplitFlag) {
                        WittTarget::SplitFlag(d)
                    } else {
                        WittTarget::TwistedFlag(d)
                    }
                }
            };
            let out = witt_of(&tgt, &w, !no_assumption)?;
            let text = match format {
                Format::Json => serde_json::to_string_pretty(&out)?,
                _ => {
                    let mut t = format!("== graded Witt groups: {} ==\n({})\n", out.target, out.banner);
                    t.push_str("degree (mod 4) | filtration | class\n");
                    for c in &out.classes {
                        t.push_str(&format!("  {:>2} | {:>3} | {}\n", c.degree, c.filtration, c.name));
                    }
                    for n in &out.notes {
                        t.push_str(&format!("note: {n}\n"));
                    }
                    t
                }
            };
            println!("{text}");
            write_artifact("witt.txt", &text)?;
            Ok(0)
        }
        Command::VerifyAll { profile, format } => {
            let report = run_all_checks(&profile);
            let text = match format {
                Format::Json => serde_json::to_string_pretty(&report)?,
                _ => report.render_table(),
            };
            println!("{text}");
            write_artifact("verify.txt", &text)?;
            Ok(if report.all_pass() { 0 } else { 1 })
        }
    }
}

fn print_presentation(pres: &crate::ahss::CobordismPresentation, format: Format) -> Result<()> {
    let text = match format {
        Format::Json => serde_json::to_string_pretty(pres)?,
        _ => {
            let mut t = format!("== {} ==\ngenerators:\n", pres.theory);
            for g in &pres.generators {
                t.push_str(&format!("  {g}\n"));
            }
            t.push_str("relations:\n");
            for r in &pres.relations {
                t.push_str(&format!("  {r}\n"));
            }
            for r in &pres.derived_relations {
                t.push_str(&format!("  derived: {r}\n"));
            }
            t.push_str(&format!("rank table entries: {}\n", pres.ranks.0.len()));
            t
        }
    };
    println!("{text}");
    write_artifact("cobordism.txt", &text)?;
    Ok(())
}
