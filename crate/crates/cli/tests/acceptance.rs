//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.
//!
//! cargo test -p cfid --test acceptance

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use cfid::report::RunReport;
use cfid::universe::UniverseSpec;
use cfid::verify::{verify, QuerySet, VerifyConfig};
use cfid_core::events::{parse_conjunction, parse_query, Intervention, Value};
use cfid_core::expr::{render_text, structurally_equal, to_json_string, Binder, Format, ProbExpression, ValueSymbol};
use cfid_core::graph::{parse_graph, CausalDiagram, Variable};
use cfid_core::identify::{id_star, idc_star, validate_witness, CondIdResult, IdResult};
use cfid_core::oracle::{
    ci_gap, factorization_gap, interventional_family, parity_pair, random_scm, DiscreteScm, RandomScmConfig,
};
use cfid_core::worlds::{make_cg, MakeCg};
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Agreement between an identified expression and enumeration, and the
/// largest admissible factorization or independence gap.
const TOLERANCE: f64 = 1e-9;
const GOLDEN_LIMIT: Duration = Duration::from_secs(1);
const W_GRAPH_LIMIT: Duration = Duration::from_secs(1);
const PARITY_LIMIT: Duration = Duration::from_secs(30);
const SWEEP_LIMIT: Duration = Duration::from_secs(300);
const SWEEP_MODELS_PER_GRAPH: usize = 20;
const SWEEP_BUDGET: u128 = 1 << 16;
const FACTORIZATION_MODELS: usize = 50;
const CI_MODELS: usize = 100;

const GOLDEN_QUERY: &str = "P(Y[X=x]=y | X=x', Z[D=d]=z, D=d)";
const SWEEP_GRAPHS: [&str; 5] = ["mediated.graph", "front-door.graph", "napkin.graph", "instrument.graph", "parity-k1/graph.txt"];

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict { pass, detail: detail.into() }
    }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn load_graph(name: &str) -> CausalDiagram {
    parse_graph(&std::fs::read_to_string(fixture(name)).expect("fixture exists")).expect("fixture parses")
}

fn lit(v: &str) -> ValueSymbol {
    ValueSymbol::Literal(Value::from(v))
}

fn bound(name: &str, var: &str) -> ValueSymbol {
    ValueSymbol::Bound { name: name.into(), var: Variable::from(var) }
}

fn pstar(sub: &[(&str, ValueSymbol)], joint: &[(&str, ValueSymbol)]) -> ProbExpression {
    let map = |pairs: &[(&str, ValueSymbol)]| pairs.iter().map(|(v, s)| (Variable::from(*v), s.clone())).collect();
    ProbExpression::pstar(map(sub), map(joint))
}

/// `Σ_w P_{z,w}(y, x') P_x(w)` with `y` as given.
fn effect_term(w: &str, y: ValueSymbol) -> ProbExpression {
    ProbExpression::product(vec![
        pstar(&[("Z", lit("z")), ("W", bound(w, "W"))], &[("Y", y), ("X", lit("x'"))]),
        pstar(&[("X", lit("x"))], &[("W", bound(w, "W"))]),
    ])
}

/// `P' / P'(x')`, with the marginal summing `y` out.
fn golden_expression() -> ProbExpression {
    let numerator = ProbExpression::sum_over(vec![Binder { name: "w".into(), var: Variable::from("W") }], effect_term("w", lit("y")));
    let marginal = ProbExpression::sum_over(
        vec![Binder { name: "v".into(), var: Variable::from("W") }, Binder { name: "u".into(), var: Variable::from("Y") }],
        effect_term("v", bound("u", "Y")),
    );
    ProbExpression::ratio(numerator, marginal)
}

/// Criteria 1 to 5, with everything they print collected in `transcript`.
struct CoreRun {
    verdicts: Vec<(u8, &'static str, Verdict)>,
    transcript: String,
}

fn criteria_one_to_five() -> CoreRun {
    let mut transcript = String::new();
    let verdicts = vec![
        (1, "golden conditional query", golden(&mut transcript)),
        (2, "counterfactual graph of the golden query", golden_graph(&mut transcript)),
        (3, "non-identification on X -> Y", w_graph(&mut transcript)),
        (4, "parity pairs k = 0, 1, 2", parity(&mut transcript)),
        (5, "soundness sweep", sweep(&mut transcript)),
    ];
    CoreRun { verdicts, transcript }
}

fn golden(transcript: &mut String) -> Verdict {
    let g = load_graph("mediated.graph");
    let q = parse_query(GOLDEN_QUERY).unwrap();
    let start = Instant::now();
    let report = RunReport::run(&g, &q, true).unwrap();
    let r = idc_star(&g, &q.gamma, &q.delta).unwrap();
    let elapsed = start.elapsed();
    transcript.push_str(&report.to_json());
    transcript.push_str(&report.to_text(Format::Latex));
    let CondIdResult::Expression(e) = r else {
        return Verdict::new(false, format!("expected an expression, got {r:?}"));
    };
    writeln!(transcript, "{}", to_json_string(&e)).unwrap();
    let equal = structurally_equal(&e, &golden_expression());
    Verdict::new(equal && elapsed < GOLDEN_LIMIT, format!("{} in {elapsed:.2?}", render_text(&e)))
}

fn golden_graph(transcript: &mut String) -> Verdict {
    let g = load_graph("mediated.graph");
    let q = parse_query(GOLDEN_QUERY).unwrap();
    let MakeCg::Graph(b) = make_cg(&g, &q.gamma.and(&q.delta)).unwrap() else {
        return Verdict::new(false, "conjunction reported inconsistent");
    };
    transcript.push_str(&b.graph.render());
    let nodes: BTreeSet<String> = b.graph.unfixed_nodes().iter().map(|v| v.to_string()).collect();
    let expected_nodes: BTreeSet<String> = ["D", "Z", "X", "W[X=x]", "Y[X=x]"].map(String::from).into();
    let events = b.gamma.canonicalize();
    let expected_events = parse_conjunction("Y[X=x]=y, X=x', Z=z, D=d").unwrap().canonicalize();
    let ok = nodes == expected_nodes && events == expected_events;
    Verdict::new(ok, format!("nodes {{{}}}, events {events}", nodes.into_iter().collect::<Vec<_>>().join(", ")))
}

fn w_graph(transcript: &mut String) -> Verdict {
    let g = parse_graph("X -> Y").unwrap();
    let start = Instant::now();
    let mut problems = Vec::new();
    let mut witnesses = Vec::new();
    for (q, a, b) in [("Y[X=x]=y, Y[X=x']=y'", "x", "x'"), ("Y[X=x]=y, Y=y'", "x", "")] {
        match id_star(&g, &parse_conjunction(q).unwrap()).unwrap() {
            IdResult::Fail(w) => {
                let values: BTreeSet<&str> = [w.value_in_sub.as_str(), w.conflicting_value.as_str()].into();
                let names_values = values.contains(a) && (b.is_empty() || values.contains(b));
                if w.conflict_var.as_str() != "X" || !names_values || !validate_witness(&g, &w).unwrap() {
                    problems.push(format!("{q}: unexpected witness {w}"));
                }
                writeln!(transcript, "{q}: {w}").unwrap();
                witnesses.push(w.to_string());
            }
            other => problems.push(format!("{q}: expected FAIL, got {other:?}")),
        }
    }
    let elapsed = start.elapsed();
    if elapsed >= W_GRAPH_LIMIT {
        problems.push(format!("took {elapsed:.2?}"));
    }
    match problems.is_empty() {
        true => Verdict::new(true, format!("{} in {elapsed:.2?}", witnesses.join("; "))),
        false => Verdict::new(false, problems.join("; ")),
    }
}

fn parity(transcript: &mut String) -> Verdict {
    let start = Instant::now();
    let mut problems = Vec::new();
    let mut gaps = Vec::new();
    for k in 0..=2 {
        let p = parity_pair(k, None).unwrap();
        let same = interventional_family(&p.m1, None).unwrap() == interventional_family(&p.m2, None).unwrap();
        let gap = p.m1.counterfactual_prob_exact(&p.query).unwrap() - p.m2.counterfactual_prob_exact(&p.query).unwrap();
        let fails = matches!(id_star(&p.graph, &p.query).unwrap(), IdResult::Fail(_));
        writeln!(transcript, "k={k}: families identical {same}, gap {gap}, fail {fails}").unwrap();
        if !same || gap <= BigRational::zero() || !fails {
            problems.push(format!("k={k}: families identical {same}, gap {gap}, id_star fails {fails}"));
        }
        gaps.push(format!("k={k} gap {gap}"));
    }
    let elapsed = start.elapsed();
    if elapsed >= PARITY_LIMIT {
        problems.push(format!("took {elapsed:.2?}"));
    }
    match problems.is_empty() {
        true => Verdict::new(true, format!("{} in {elapsed:.2?}", gaps.join(", "))),
        false => Verdict::new(false, problems.join("; ")),
    }
}

fn sweep(transcript: &mut String) -> Verdict {
    let start = Instant::now();
    let cfg = VerifyConfig {
        models: SWEEP_MODELS_PER_GRAPH,
        seed: 0,
        queries: QuerySet::Universe(UniverseSpec { max_events: 3, max_worlds: 2, max_sub: 1 }),
        scm: RandomScmConfig { budget: SWEEP_BUDGET, ..RandomScmConfig::default() },
        dump_failures: None,
    };
    let graphs: Vec<CausalDiagram> = SWEEP_GRAPHS.iter().map(|n| load_graph(n)).collect();
    let summaries: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = graphs.iter().map(|g| s.spawn(|| verify(g, &cfg).unwrap())).collect();
        handles.into_iter().map(|h| h.join().expect("sweep thread")).collect()
    });
    let elapsed = start.elapsed();
    let mut problems = Vec::new();
    let (mut queries, mut comparisons, mut models) = (0, 0, 0);
    for (name, s) in SWEEP_GRAPHS.iter().zip(&summaries) {
        writeln!(transcript, "== {name}\n{}{}", s.to_text(), s.expressions).unwrap();
        queries += s.queries;
        comparisons += s.comparisons;
        models += s.models - s.skipped.len();
        if !s.skipped.is_empty() {
            problems.push(format!("{name}: {} models skipped", s.skipped.len()));
        }
        for m in s.mismatches.iter().take(3) {
            problems.push(format!("{name}: {}: {}", m.query, m.detail));
        }
        if s.mismatches.len() > 3 {
            problems.push(format!("{name}: {} mismatches in all", s.mismatches.len()));
        }
    }
    if elapsed >= SWEEP_LIMIT {
        problems.push(format!("took {elapsed:.2?}"));
    }
    match problems.is_empty() {
        true => Verdict::new(true, format!("{models} models, {queries} queries, {comparisons} comparisons, 0 mismatches in {elapsed:.2?}")),
        false => Verdict::new(false, problems.join("; ")),
    }
}

/// Seeded random ADMG with 3 to 5 nodes whose random model fits `budget`.
fn random_model(rng: &mut ChaCha8Rng, budget: u128) -> DiscreteScm {
    const NAMES: [&str; 5] = ["A", "B", "C", "D", "E"];
    loop {
        let n = rng.gen_range(3..=5);
        let mut directed = Vec::new();
        let mut bidirected = Vec::new();
        let names = &NAMES[..n];
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                if rng.gen_bool(0.45) {
                    directed.push((Variable::from(*a), Variable::from(*b)));
                }
                if rng.gen_bool(0.25) {
                    bidirected.push((Variable::from(*a), Variable::from(*b)));
                }
            }
        }
        let g = CausalDiagram::new(names.iter().map(|s| Variable::from(*s)), directed, bidirected).unwrap();
        let cfg = RandomScmConfig { default_domain: rng.gen_range(2..=3), budget, ..RandomScmConfig::default() };
        if let Ok(m) = random_scm(&g, rng.gen(), &cfg) {
            return m;
        }
    }
}

fn factorization() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut checked, mut worst) = (0usize, 0.0f64);
    for _ in 0..FACTORIZATION_MODELS {
        let m = random_model(&mut rng, SWEEP_BUDGET);
        for (v, values) in m.domains() {
            for x in values {
                let x = Intervention::from_pairs([(v.clone(), x.clone())]).unwrap();
                worst = worst.max(factorization_gap(&m, &x).unwrap());
                checked += 1;
            }
        }
    }
    Verdict::new(worst <= TOLERANCE, format!("{checked} singleton interventions on {FACTORIZATION_MODELS} models, largest gap {worst:e}"))
}

fn independence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut triples, mut worst) = (0usize, 0.0f64);
    for _ in 0..CI_MODELS {
        let m = random_model(&mut rng, SWEEP_BUDGET);
        let g = m.diagram();
        let nodes: Vec<&Variable> = g.nodes().iter().collect();
        // label each node: 0 outside, 1 in A, 2 in B, 3 in Z
        for code in 0..4usize.pow(nodes.len() as u32) {
            let mut sets: [BTreeSet<Variable>; 4] = Default::default();
            let mut c = code;
            for v in &nodes {
                sets[c % 4].insert((*v).clone());
                c /= 4;
            }
            let [_, a, b, z] = sets;
            // the pair (A, B) and (B, A) are the same triple
            if a.is_empty() || b.is_empty() || a.first() > b.first() {
                continue;
            }
            if g.d_separated(&a, &b, &z).unwrap() {
                worst = worst.max(ci_gap(&m, &a, &b, &z).unwrap());
                triples += 1;
            }
        }
    }
    Verdict::new(triples > 0 && worst <= TOLERANCE, format!("{triples} d-separated triples on {CI_MODELS} models, largest gap {worst:e}"))
}

/// Runs criteria 1 to 5 again in this process and the golden query twice
/// through the binary, comparing output byte for byte.
fn determinism(first: &CoreRun) -> Verdict {
    let second = criteria_one_to_five();
    let mut problems = Vec::new();
    if second.transcript != first.transcript {
        let line = first.transcript.lines().zip(second.transcript.lines()).position(|(a, b)| a != b);
        problems.push(format!("in-process transcripts differ (first differing line {line:?})"));
    }
    let run = || {
        let out = Command::new(env!("CARGO_BIN_EXE_cfid"))
            .args(["identify", fixture("mediated.graph").to_str().unwrap(), GOLDEN_QUERY, "--json", "--explain"])
            .output()
            .expect("binary runs");
        out.stdout
    };
    let (a, b) = (run(), run());
    if a != b || a.is_empty() {
        problems.push("binary reports differ".to_string());
    }
    match problems.is_empty() {
        true => Verdict::new(true, format!("{} transcript bytes identical, {} report bytes identical", first.transcript.len(), a.len())),
        false => Verdict::new(false, problems.join("; ")),
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let core = criteria_one_to_five();
    let mut all: Vec<(u8, &str, Verdict)> = Vec::new();
    for (n, name, v) in &core.verdicts {
        all.push((*n, name, Verdict::new(v.pass, v.detail.clone())));
    }
    all.push((6, "c-component factorization", factorization()));
    all.push((7, "d-separation implies independence", independence()));
    all.push((8, "determinism of criteria 1-5", determinism(&core)));

    let mut failed = 0;
    for (n, name, v) in &all {
        println!("{} criterion {n}: {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("{} of {} criteria passed in {:.1?}", all.len() - failed, all.len(), start.elapsed());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
