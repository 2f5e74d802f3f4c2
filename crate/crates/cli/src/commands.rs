use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, Read};
use std::path::Path;

use admg::construction::build_coupling;
use admg::continuous::{continuous_sample, ContinuousSpec};
use admg::fixing::{check_nested_markov, Comparison, NestedReport};
use admg::format::{admg_to_text, parse_graph, write_graph, GraphDocument};
use admg::generate::comp_graph;
use admg::kernel::{parse_probability, DiscreteKernel};
use admg::minimality::{reduce_to_minimal, tree_reduce};
use admg::oracle::{verify_theorem, TheoremOutcome};
use admg::projection::{canonical_dag, closure, densely_connected, latent_project, latent_project_cadmg, marg_project, pair_subgraph, Preference};
use admg::{Admg, Error, VertexSet};
use serde_json::{json, Value};

use crate::{Cli, Command, Family};

pub struct Outcome {
    pub code: u8,
    pub stdout: String,
    /// One-line reason printed to stderr.
    pub reason: Option<String>,
}

enum Failure {
    Usage(String),
    Module(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } => Failure::Usage(e.to_string()),
            e => Failure::Module(e),
        }
    }
}

/// Rendered result: plain text, its JSON twin, and whether the property held.
struct Report {
    text: String,
    json: Value,
    holds: bool,
}

impl Report {
    fn ok(text: String, json: Value) -> Self {
        Report { text, json, holds: true }
    }
}

pub fn run(cli: &Cli) -> Outcome {
    match execute(&cli.command) {
        Ok(r) => {
            let stdout = if cli.json {
                let mut s = serde_json::to_string_pretty(&r.json).expect("plain JSON values");
                s.push('\n');
                s
            } else {
                r.text
            };
            Outcome {
                code: if r.holds { 0 } else { 1 },
                stdout,
                reason: None,
            }
        }
        Err(Failure::Usage(reason)) => Outcome { code: 2, stdout: String::new(), reason: Some(reason) },
        Err(Failure::Module(e)) => Outcome { code: 1, stdout: String::new(), reason: Some(e.to_string()) },
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    let mut text = String::new();
    let read = if path == Path::new("-") {
        io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        File::open(path).and_then(|mut f| f.read_to_string(&mut text).map(|_| ()))
    };
    read.map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(text)
}

fn load(path: &Path) -> Result<GraphDocument, Failure> {
    Ok(parse_graph(&read_input(path)?)?)
}

/// Latent vertices are projected out before any analysis.
fn load_observed(path: &Path) -> Result<Admg, Failure> {
    let doc = load(path)?;
    if !doc.graph.fixed().is_empty() {
        return Err(Failure::Module(Error::Precondition("this command expects no fixed vertices".into())));
    }
    if doc.latent.is_empty() {
        Ok(doc.graph.into_graph())
    } else {
        Ok(latent_project(doc.admg(), &doc.latent)?)
    }
}

fn names(g: &Admg, set: &VertexSet) -> Vec<String> {
    g.names(set)
}

fn graph_json(text: &str, g: &Admg) -> Value {
    let edges = |list: Vec<(usize, usize)>| -> Vec<[String; 2]> {
        list.into_iter().map(|(a, b)| [g.label(a).to_string(), g.label(b).to_string()]).collect()
    };
    json!({
        "text": text,
        "vertices": names(g, &g.all()),
        "directed": edges(g.directed_edges()),
        "bidirected": edges(g.bidirected_edges()),
    })
}

fn execute(command: &Command) -> Result<Report, Failure> {
    match command {
        Command::Project { file } => {
            let doc = load(file)?;
            let projected = latent_project_cadmg(&doc.graph, &doc.latent)?;
            let text = write_graph(projected.graph(), &VertexSet::new(), &projected.fixed());
            let json = json!({ "graph": graph_json(&text, projected.graph()), "fixed": names(projected.graph(), &projected.fixed()) });
            Ok(Report::ok(text, json))
        }
        Command::Canonical { file } => {
            let g = load_observed(file)?;
            let c = canonical_dag(&g)?;
            let text = write_graph(&c.dag, &c.hidden, &VertexSet::new());
            let replaced: Vec<Value> = c
                .replaced
                .iter()
                .zip(c.hidden.iter())
                .map(|(&(a, b), h)| json!({ "hidden": c.dag.label(h).as_str(), "edge": [g.label(a).as_str(), g.label(b).as_str()] }))
                .collect();
            let json = json!({ "graph": graph_json(&text, &c.dag), "latent": names(&c.dag, &c.hidden), "replaced": replaced });
            Ok(Report::ok(text, json))
        }
        Command::Marg { file } => {
            let m = marg_project(&load_observed(file)?);
            let text = admg_to_text(&m);
            let json = json!({ "graph": graph_json(&text, &m) });
            Ok(Report::ok(text, json))
        }
        Command::Closure { file, set } => {
            let g = load_observed(file)?;
            let targets = g.vertex_set(set)?;
            let r = closure(&g, &targets)?;
            let members = names(&g, &r.closure);
            let text = format!("closure: {}\nintrinsic: {}\n", members.join(" "), r.intrinsic);
            let steps: Vec<Vec<String>> = r.iterations.iter().map(|s| names(&g, s)).collect();
            let json = json!({ "closure": members, "intrinsic": r.intrinsic, "iterations": steps });
            Ok(Report::ok(text, json))
        }
        Command::Dense { file, v, w } => {
            let g = load_observed(file)?;
            let verdict = densely_connected(&g, g.vertex(v)?, g.vertex(w)?)?;
            let witness = names(&g, &verdict.witness_closure);
            let cases: Vec<&str> = verdict.cases.iter().map(|c| c.as_str()).collect();
            let mut text = format!("dense: {}\ncase: {}\n", verdict.dense(), verdict.case.as_str());
            if verdict.dense() {
                let _ = writeln!(text, "witness: {}", witness.join(" "));
            }
            let json = json!({ "dense": verdict.dense(), "case": verdict.case.as_str(), "cases": cases, "witness": witness });
            Ok(Report { text, json, holds: verdict.dense() })
        }
        Command::Minimal { file, v, w } => {
            let g = load_observed(file)?;
            let pair = pair_subgraph(&g, g.vertex(v)?, g.vertex(w)?, Preference::DirectedFirst)?;
            let red = tree_reduce(&pair)?;
            let (pruned, keep) = reduce_to_minimal(&red)?;
            let h = pruned.reduced();
            let kept = names(red.reduced(), &keep);
            let graph = admg_to_text(h);
            let text = format!("{graph}W: {}\n", kept.join(" "));
            let json = json!({ "graph": graph_json(&graph, h), "case": pair.case.as_str(), "W": kept });
            Ok(Report::ok(text, json))
        }
        Command::Couple { file, v, w, k, continuous, n, seed, set_w, o } => {
            if o.is_some() && seed.is_none() {
                return Err(Failure::Usage("writing a dataset to a file requires --seed".into()));
            }
            let g = load_observed(file)?;
            let (vi, wi) = (g.vertex(v)?, g.vertex(w)?);
            let seed = seed.unwrap_or(0);
            let (csv, equations) = match continuous {
                Some(rho) => {
                    let data = continuous_sample(&g, vi, wi, &ContinuousSpec::with_rho(*rho), *n, seed)?;
                    (data.to_csv()?, Vec::new())
                }
                None => {
                    let sem = build_coupling(&g, vi, wi, *k, Preference::DirectedFirst)?;
                    (sem.sample(*n, seed, *set_w)?.to_csv()?, sem.describe())
                }
            };
            match o {
                Some(path) => {
                    fs::write(path, &csv).map_err(|e| Failure::Module(Error::from(e)))?;
                    let mut text = format!("wrote {n} rows to {}\n", path.display());
                    for line in &equations {
                        let _ = writeln!(text, "{line}");
                    }
                    let json = json!({ "rows": n, "output": path.display().to_string(), "equations": equations });
                    Ok(Report::ok(text, json))
                }
                None => {
                    let json = json!({ "rows": n, "csv": csv, "equations": equations });
                    Ok(Report::ok(csv, json))
                }
            }
        }
        Command::Verify { file, v, w, k } => {
            let g = load_observed(file)?;
            match verify_theorem(&g, g.vertex(v)?, g.vertex(w)?, *k)? {
                TheoremOutcome::Checked(r) => {
                    let mut text = String::new();
                    for line in r.lines() {
                        let _ = writeln!(text, "{line}");
                    }
                    let json = json!({
                        "refused": false,
                        "equality": r.equality_holds,
                        "equality_mass": r.equality_mass.to_string(),
                        "independence": r.independence_holds,
                        "uniform": r.uniform_marginals,
                        "failing_subset": r.failing_subset,
                        "passes": r.passes(),
                    });
                    Ok(Report { text, json, holds: r.passes() })
                }
                TheoremOutcome::Refused { v, w } => {
                    let text = format!("refused: `{v}` and `{w}` are not densely connected\n");
                    Ok(Report { text, json: json!({ "refused": true, "passes": false }), holds: false })
                }
            }
        }
        Command::NestedCheck { file, dist, tol, .. } => {
            let g = load_observed(file)?;
            let table = read_input(dist)?;
            let p = DiscreteKernel::from_csv(table.as_bytes()).map_err(|e| match e {
                Error::Distribution(_) | Error::Io(_) => Failure::Usage(e.to_string()),
                e => Failure::Module(e),
            })?;
            let comparison = match tol {
                Some(t) => Comparison::Tolerance(parse_probability(t).map_err(|e| Failure::Usage(format!("--tol: {e}")))?),
                None => Comparison::Exact,
            };
            let report = check_nested_markov(&p, &g, &comparison)?;
            Ok(render_nested(&g, &report))
        }
        Command::Gen { family: Family::CompGraph { k } } => {
            let g = comp_graph(*k)?;
            let text = admg_to_text(&g);
            let json = json!({ "graph": graph_json(&text, &g) });
            Ok(Report::ok(text, json))
        }
    }
}

fn render_nested(g: &Admg, report: &NestedReport) -> Report {
    let braces = |s: &VertexSet| format!("{{{}}}", names(g, s).join(","));
    let mut text = format!("reachable sets: {}\n", report.reachable_sets_checked);
    if report.passes() {
        text.push_str("nested: pass — every reachable kernel factorizes\n");
    } else {
        let _ = writeln!(text, "nested: fail — {} violation(s)", report.violations.len());
    }
    let mut violations = Vec::new();
    for v in &report.violations {
        let districts: Vec<String> = v.districts.iter().map(braces).collect();
        let _ = writeln!(
            text,
            "violation: {} over {} deviates by {}",
            braces(&v.reachable),
            districts.join(" "),
            v.deviation
        );
        violations.push(json!({
            "reachable": names(g, &v.reachable),
            "districts": v.districts.iter().map(|d| names(g, d)).collect::<Vec<_>>(),
            "deviation": v.deviation.to_string(),
        }));
    }
    let json = json!({
        "reachable_sets": report.reachable_sets_checked,
        "passes": report.passes(),
        "violations": violations,
    });
    Report { text, json, holds: report.passes() }
}
