use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use threeadic::catalog::Catalog;
use threeadic::classifier::{Classifier, FactBase, GraphQuery};
use threeadic::cusps::{cusp_set, genus_data};
use threeadic::lmfdb::{crosscheck, Client, Mode};
use threeadic::modmat::parse_matrix_list;
use threeadic::report::{self, all_pass, Check};
use threeadic::transform::{transform_image, transform_label};
use threeadic::{Error, Line, Result, Subgroup};

#[derive(Parser)]
#[command(name = "threeadic", version, about = "3-adic images on isogeny-torsion graphs")]
struct Cli {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct GroupArg {
    /// Catalog label (shipped or auxiliary, e.g. X0(11)).
    #[arg(long, conflicts_with = "gens")]
    label: Option<String>,
    /// Generators "[a,b,c,d];[a,b,c,d]".
    #[arg(long, requires = "modulus")]
    gens: Option<String>,
    #[arg(long = "mod", id = "modulus")]
    modulus: Option<u32>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Label of the group generated by the given matrices.
    Identify {
        #[arg(long)]
        gens: String,
        #[arg(long = "mod")]
        modulus: u32,
    },
    /// Transform across the 3-isogeny of each stable line (or the given one).
    Transform {
        #[arg(long)]
        label: String,
        /// Stable line as "x,y" mod 3.
        #[arg(long)]
        line: Option<String>,
    },
    /// Cusps of the modular curve.
    Cusps(GroupArg),
    /// Genus of the modular curve.
    Genus(GroupArg),
    /// Level of the group.
    Level(GroupArg),
    /// Admissible label tuples for a graph type and torsion.
    Classify {
        #[arg(long)]
        graph: String,
        /// Comma separated torsion per vertex: 1, 3, 2x6, or * for any.
        #[arg(long, default_value = "")]
        torsion: String,
        /// Ignore the rational-point facts.
        #[arg(long)]
        no_facts: bool,
    },
    /// Graph types where a label can occur.
    GraphsFor {
        #[arg(long)]
        label: String,
    },
    /// Level, index and genus of every catalog label, and X0(N) cusp counts.
    VerifyCatalog,
    /// Recompute the transform table.
    VerifyTable1,
    /// Torsion sets and containment claims.
    VerifyLemmas,
    /// Compare an isogeny class against the classification.
    Crosscheck {
        #[arg(long = "class")]
        class: String,
        /// Read the fixture instead of the API.
        #[arg(long)]
        offline: bool,
        #[arg(long, env = "LMFDB_BASE_URL")]
        base_url: Option<String>,
        #[arg(long, env = "FIXTURE_DIR")]
        fixture_dir: Option<std::path::PathBuf>,
    },
}

/// Text or JSON output and whether everything verified.
struct Output {
    text: String,
    json: Value,
    ok: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(out) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&out.json).expect("json"));
            } else {
                print!("{}", out.text);
            }
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn both_catalogs() -> Result<Catalog> {
    let mut entries: Vec<_> = Catalog::shipped()?.entries().to_vec();
    entries.extend(Catalog::auxiliary()?.entries().iter().cloned());
    Catalog::from_entries(entries)
}

/// The group named by `--label` or `--gens`, plus −I when the curve needs it.
fn resolve(arg: &GroupArg) -> Result<(String, Subgroup, Subgroup)> {
    if let Some(label) = &arg.label {
        let cat = both_catalogs()?;
        let e = cat.get(label).ok_or_else(|| Error::UnknownLabel(label.clone()))?;
        return Ok((label.clone(), e.group().clone(), e.curve_group()));
    }
    match (&arg.gens, arg.modulus) {
        (Some(gens), Some(n)) => {
            let g = Subgroup::generate(&parse_matrix_list(gens, n)?, n)?;
            let curve = g.with_minus_identity();
            Ok((gens.clone(), g, curve))
        }
        _ => Err(Error::Parse("give --label or --gens with --mod".into())),
    }
}

fn checks_output(checks: &[Check], extra: &str) -> Output {
    let mut text: String = checks.iter().map(|c| format!("{c}\n")).collect();
    text.push_str(extra);
    Output { text, json: json!({ "checks": checks }), ok: all_pass(checks) }
}

fn run(cmd: Cmd) -> Result<Output> {
    match cmd {
        Cmd::Identify { gens, modulus } => {
            let g = Subgroup::generate(&parse_matrix_list(&gens, modulus)?, modulus)?;
            let label = both_catalogs()?.identify(&g)?;
            let text = format!("{}\n", label.as_deref().unwrap_or("no match"));
            Ok(Output { text, json: json!({ "label": label }), ok: true })
        }
        Cmd::Transform { label, line } => {
            let cat = Catalog::shipped()?;
            let results = match line {
                Some(l) => {
                    let line = Line::parse(&l, 3)?;
                    let e = cat.get(&label).ok_or_else(|| Error::UnknownLabel(label.clone()))?;
                    let out = transform_image(e.group(), &line)?;
                    vec![(line, cat.identify(&out)?)]
                }
                None => transform_label(&cat, &label)?.into_iter().map(|r| (r.line, r.output_label)).collect(),
            };
            let mut text = String::new();
            let mut rows = Vec::new();
            for (line, out) in &results {
                let out = out.as_deref().unwrap_or("unidentified");
                text.push_str(&format!("{label} along {line} -> {out}\n"));
                rows.push(json!({ "line": line.to_string(), "output": out }));
            }
            if results.is_empty() {
                text.push_str(&format!("{label} has no stable line mod 3\n"));
            }
            Ok(Output { text, json: json!({ "input": label, "transforms": rows }), ok: true })
        }
        Cmd::Cusps(arg) => {
            let (name, _, curve) = resolve(&arg)?;
            let cs = cusp_set(&curve)?;
            let sizes: Vec<u64> = (0..cs.len()).map(|k| cs.double_coset_size(k)).collect();
            let text = format!("{name}: {} cusps, {} rational\n", cs.len(), cs.rational_count());
            Ok(Output {
                text,
                json: json!({ "group": name, "cusps": cs.len(), "rational": cs.rational_count(), "double_coset_sizes": sizes }),
                ok: true,
            })
        }
        Cmd::Genus(arg) => {
            let (name, _, curve) = resolve(&arg)?;
            let gd = genus_data(&curve)?;
            Ok(Output {
                text: format!("{}\n", gd.genus),
                json: json!({
                    "group": name, "genus": gd.genus, "index": gd.index, "cusps": gd.cusps,
                    "elliptic2": gd.elliptic2, "elliptic3": gd.elliptic3
                }),
                ok: true,
            })
        }
        Cmd::Level(arg) => {
            let (name, g, _) = resolve(&arg)?;
            Ok(Output { text: format!("{}\n", g.level()), json: json!({ "group": name, "level": g.level() }), ok: true })
        }
        Cmd::Classify { graph, torsion, no_facts } => {
            let cat = Catalog::shipped()?;
            let facts = if no_facts { FactBase::empty() } else { FactBase::shipped()? };
            facts.validate(&cat)?;
            let query = GraphQuery::parse(&graph, &torsion)?;
            let tuples = Classifier::new(&cat)?.classify(&query, &facts)?;
            let mut text = format!("{query}\n");
            for t in &tuples {
                text.push_str(&format!("{t}\n"));
            }
            if tuples.is_empty() {
                text.push_str("no admissible tuple\n");
            }
            let rows: Vec<Value> =
                tuples.iter().map(|t| json!({ "labels": t.labels, "conditional": t.conditional })).collect();
            Ok(Output {
                text,
                json: json!({ "graph": query.graph.to_string(), "torsion": query.torsion_string(), "tuples": rows }),
                ok: true,
            })
        }
        Cmd::GraphsFor { label } => {
            let cat = Catalog::shipped()?;
            let facts = FactBase::shipped()?;
            let occ = Classifier::new(&cat)?.graphs_for_label(&label, &facts)?;
            let text: String = occ.iter().map(|o| format!("{o}\n")).collect();
            let rows: Vec<Value> = occ
                .iter()
                .map(|o| json!({ "graph": o.graph.to_string(), "positions": o.positions, "conditional": o.conditional }))
                .collect();
            Ok(Output { text, json: json!({ "label": label, "graphs": rows }), ok: true })
        }
        Cmd::VerifyCatalog => {
            let mut checks = report::verify_catalog(&Catalog::shipped()?)?;
            checks.extend(report::verify_auxiliary(&Catalog::auxiliary()?)?);
            let bad = checks.iter().filter(|c| !c.pass).count();
            Ok(checks_output(&checks, &format!("{} checks, {bad} failed\n", checks.len())))
        }
        Cmd::VerifyTable1 => {
            let (rows, summary) = report::verify_table1(&Catalog::shipped()?)?;
            let mut text = String::new();
            let mut json_rows = Vec::new();
            for r in &rows {
                let outs: Vec<String> = r
                    .line_outputs
                    .iter()
                    .map(|(l, o)| format!("{l}: {}", o.as_deref().unwrap_or("unidentified")))
                    .collect();
                let status = if r.reproduced { "ok" } else { "MISSING" };
                text.push_str(&format!("{} -> {} {status} [{}]\n", r.row.input, r.row.output, outs.join("; ")));
                json_rows.push(json!({
                    "input": r.row.input, "output": r.row.output, "reproduced": r.reproduced, "lines": outs
                }));
            }
            text.push_str(&format!("{}\n", summary.detail));
            Ok(Output { text, json: json!({ "rows": json_rows, "summary": summary }), ok: summary.pass })
        }
        Cmd::VerifyLemmas => {
            let checks = report::verify_lemmas(&Catalog::shipped()?)?;
            Ok(checks_output(&checks, ""))
        }
        Cmd::Crosscheck { class, offline, base_url, fixture_dir } => {
            let mut client = Client::from_env();
            if let Some(u) = base_url {
                client.base_url = u;
            }
            if let Some(d) = fixture_dir {
                client.fixture_dir = d;
            }
            let mode = if offline { Mode::Offline } else { Mode::Online };
            let rec = client.fetch_class(&class, mode)?;
            let cat = Catalog::shipped()?;
            let r = crosscheck(&rec, &Classifier::new(&cat)?, &FactBase::shipped()?)?;
            Ok(Output { text: format!("{r}\n"), json: serde_json::to_value(&r).expect("json"), ok: r.passed() })
        }
    }
}
