//! Acceptance checks, one line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so that the report is printed
//! in order: `cargo test -p lips-cli --test acceptance`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::Deserialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use lips_core::analysis::{bootstrap_ci, summarize, welch_t_test};
use lips_core::board::{BoardDocument, Placement};
use lips_core::dsl::{check_question, evaluate};
use lips_core::lips::{aligned_dominance_means, nested_bucket_means, score_candidates, CandidateRecord, RawCandidate};
use lips_core::llm::{
    build_generation_prompt, build_translation_prompt, encode_prepended, render_for_prompt,
    sample_translation_examples, BoardFormat, PromptMode, QAExample, ShotBoard,
};
use lips_core::pcfg::{default_battleship_grammar, sample_program, sample_program_traced, SampleConfig};
use lips_core::seed::{derive_seed_str, rng_from, sub_rng};
use lips_core::{
    answer_distribution, eig, enumerate_hypotheses, parse_program, posterior_update, Color, Coord, FullBoard,
    GameConfig, HypothesisSpace, Orientation, PartialBoard, ShipSpec, Value,
};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(rel: &str) -> PathBuf {
    root().join("fixtures").join(rel)
}

fn load_doc(path: &Path) -> (String, PartialBoard) {
    let doc = BoardDocument::parse(&fs::read_to_string(path).unwrap()).unwrap();
    let id = doc.id.clone().unwrap_or_else(|| path.file_stem().unwrap().to_string_lossy().into_owned());
    (id, doc.to_board().unwrap())
}

#[derive(Deserialize)]
struct HumanRow {
    board_id: String,
    question: String,
    program: String,
}

fn human_rows(path: &Path) -> Vec<HumanRow> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

// ---------------------------------------------------------------- 1

/// A complete board drawn by rejection: uniform lengths, orientations and
/// origins, redrawn until the ships are disjoint.
fn random_full_board<R: Rng>(config: &Arc<GameConfig>, rng: &mut R) -> FullBoard {
    loop {
        let placements: Vec<Placement> = config
            .ships
            .iter()
            .map(|s| {
                let length = s.lengths[rng.random_range(0..s.lengths.len())];
                let orientation = if rng.random_bool(0.5) { Orientation::Horizontal } else { Orientation::Vertical };
                let (max_r, max_c) = match orientation {
                    Orientation::Horizontal => (config.rows, config.cols - length + 1),
                    Orientation::Vertical => (config.rows - length + 1, config.cols),
                };
                Placement {
                    ship: s.id,
                    origin: Coord::new(rng.random_range(1..=max_r) as u8, rng.random_range(1..=max_c) as u8),
                    orientation,
                    length: length as u8,
                }
            })
            .collect();
        if let Ok(b) = FullBoard::new(config.clone(), placements) {
            return b;
        }
    }
}

fn color_at(board: &FullBoard, c: Coord) -> Color {
    board.placements().iter().find(|p| p.contains(c)).map_or(Color::Water, |p| p.ship)
}

fn reveal_random<R: Rng>(full: &FullBoard, count: usize, rng: &mut R) -> PartialBoard {
    let config = Arc::new(full.config().clone());
    let mut coords: Vec<Coord> = config.coords().collect();
    coords.shuffle(rng);
    let revealed: Vec<(Coord, Color)> = coords[..count].iter().map(|&c| (c, color_at(full, c))).collect();
    PartialBoard::with_revealed(config, &revealed).unwrap()
}

fn c1_eig_identity() -> Check {
    let config = Arc::new(GameConfig::default());
    let grammar = default_battleship_grammar();
    let cfg = SampleConfig::default();
    let mut rng = rng_from(derive_seed_str(1, "acceptance/eig-identity"));
    let mut pairs = 0;
    let mut worst_err = 0.0f64;
    let mut slowest = Duration::ZERO;
    let mut draws = 0;
    while pairs < 50 {
        let full = random_full_board(&config, &mut rng);
        let revealed = rng.random_range(4..=14);
        let space = enumerate_hypotheses(&reveal_random(&full, revealed, &mut rng)).map_err(|e| e.to_string())?;
        let mut on_board = 0;
        while on_board < 5 {
            draws += 1;
            if draws > 5000 {
                return Err("could not find 50 programs defined on their boards".into());
            }
            let x = sample_program(&grammar, &cfg, &mut rng).map_err(|e| e.to_string())?;
            let start = Instant::now();
            let Ok(score) = eig(&x, &space) else { continue };
            slowest = slowest.max(start.elapsed());
            let dist = answer_distribution(&x, &space).map_err(|e| e.to_string())?;
            let h: f64 = dist.iter().map(|(_, p)| if p > 0.0 { -p * p.log2() } else { 0.0 }).sum();
            worst_err = worst_err.max((score.bits - h).abs());
            on_board += 1;
            pairs += 1;
        }
    }
    let msg = format!("50 pairs, max |eig - H(answer)| = {worst_err:.2e}, slowest eig {:.3}s", slowest.as_secs_f64());
    if worst_err <= 1e-9 && slowest < Duration::from_secs(1) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

// ---------------------------------------------------------------- 2

fn c2_binary_split() -> Check {
    let mut report = Vec::new();
    // Single ship of length 2 on 3x3: 6 horizontal and 6 vertical placements.
    let cases = [
        (GameConfig::single_ship(3, 3, Color::Red, &[2]).unwrap(), "(== (orient Red) H)"),
        (GameConfig::single_ship(2, 2, Color::Red, &[2]).unwrap(), "(orient Red)"),
        (GameConfig::single_ship(4, 4, Color::Blue, &[2]).unwrap(), "(== (orient Blue) V)"),
    ];
    for (config, program) in cases {
        let space = enumerate_hypotheses(&PartialBoard::hidden(Arc::new(config))).map_err(|e| e.to_string())?;
        let x = parse_program(program).map_err(|e| e.to_string())?;
        let d = answer_distribution(&x, &space).map_err(|e| e.to_string())?;
        if d.support_size() != 2 || d.iter().any(|(_, p)| p != 0.5) {
            return Err(format!("{program} does not split its space in half"));
        }
        let bits = eig(&x, &space).map_err(|e| e.to_string())?.bits;
        if (bits - 1.0).abs() > 1e-12 {
            return Err(format!("{program}: eig {bits}"));
        }
        report.push(format!("{bits}"));
    }
    Ok(format!("eig = {} on three exact halvings", report.join(", ")))
}

// ---------------------------------------------------------------- 3

/// Every assignment of a placement to each ship, kept when pairwise
/// disjoint and consistent with the revealed tiles.
fn oracle_boards(board: &PartialBoard) -> Vec<Vec<Placement>> {
    let config = board.config();
    let mut per_ship: Vec<Vec<Placement>> = Vec::new();
    for s in &config.ships {
        let mut options = Vec::new();
        for &len in &s.lengths {
            for r in 0..config.rows {
                for c in 0..config.cols {
                    if c + len <= config.cols {
                        options.push(Placement {
                            ship: s.id,
                            origin: Coord::new(r as u8 + 1, c as u8 + 1),
                            orientation: Orientation::Horizontal,
                            length: len as u8,
                        });
                    }
                    if r + len <= config.rows {
                        options.push(Placement {
                            ship: s.id,
                            origin: Coord::new(r as u8 + 1, c as u8 + 1),
                            orientation: Orientation::Vertical,
                            length: len as u8,
                        });
                    }
                }
            }
        }
        per_ship.push(options);
    }
    let mut out = Vec::new();
    let mut stack: Vec<Placement> = Vec::new();
    fn rec(
        per_ship: &[Vec<Placement>],
        stack: &mut Vec<Placement>,
        board: &PartialBoard,
        out: &mut Vec<Vec<Placement>>,
    ) {
        if stack.len() == per_ship.len() {
            let consistent = board.config().coords().all(|c| match board.get(c) {
                None => true,
                Some(seen) => {
                    let actual = stack.iter().find(|p| p.contains(c)).map_or(Color::Water, |p| p.ship);
                    actual == seen
                }
            });
            let lengths_ok = !board.config().distinct_lengths
                || (0..stack.len()).all(|i| (0..i).all(|j| stack[i].length != stack[j].length));
            if consistent && lengths_ok {
                let mut b = stack.clone();
                b.sort();
                out.push(b);
            }
            return;
        }
        for p in &per_ship[stack.len()] {
            if stack.iter().any(|q| q.coords().any(|c| p.contains(c))) {
                continue;
            }
            stack.push(*p);
            rec(per_ship, stack, board, out);
            stack.pop();
        }
    }
    rec(&per_ship, &mut stack, board, &mut out);
    out.sort();
    out
}

fn placement_sets(space: &HypothesisSpace) -> Vec<Vec<Placement>> {
    let mut v: Vec<Vec<Placement>> = space
        .boards()
        .iter()
        .map(|b| {
            let mut p = b.placements().to_vec();
            p.sort();
            p
        })
        .collect();
    v.sort();
    v
}

/// EIG of a uniform prior from answer counts: log2 N minus the expected
/// log2 of the posterior size.
fn oracle_eig(counts: &BTreeMap<Value, usize>, n: usize) -> f64 {
    if counts.len() <= 1 {
        return 0.0;
    }
    let nf = n as f64;
    let expected: f64 = counts.values().map(|&c| (c as f64 / nf) * (c as f64).log2()).sum();
    (nf.log2() - expected).clamp(0.0, nf.log2())
}

fn oracle_suite() -> Vec<(PartialBoard, Vec<&'static str>)> {
    let small = [
        "(orient Red)",
        "(size Red)",
        "(topleft (coloredTiles Red))",
        "(bottomright (coloredTiles Red))",
        "(color 1A)",
        "(color 2B)",
        "(== (color 1B) Red)",
        "(setSize (coloredTiles Water))",
        "(rowL (topleft (coloredTiles Red)))",
        "(colL (bottomright (coloredTiles Red)))",
        "(any (map (lambda y0 (== (rowL y0) 1)) (coloredTiles Red)))",
        "(+ (size Red) (rowL (topleft (coloredTiles Red))))",
    ];
    let three = [
        "(orient Red)",
        "(size Red)",
        "(topleft (coloredTiles Red))",
        "(bottomright (coloredTiles Red))",
        "(color 2B)",
        "(color 3C)",
        "(== (color 1A) Water)",
        "(setSize (coloredTiles Red))",
        "(colL (topleft (coloredTiles Red)))",
        "(any (map (lambda y0 (== (colL y0) 3)) (coloredTiles Red)))",
        "(== (rowL (topleft (coloredTiles Red))) (rowL (bottomright (coloredTiles Red))))",
    ];
    let two_ships = [
        "(orient Red)",
        "(orient Blue)",
        "(touch Red Blue)",
        "(topleft (coloredTiles Blue))",
        "(color 2B)",
        "(setSize (coloredTiles Water))",
        "(== (orient Red) (orient Blue))",
        "(setSize (setDifference (coloredTiles Red) (coloredTiles Blue)))",
    ];

    let mut suite = Vec::new();
    for (rows, cols, lengths) in [(2, 2, vec![2]), (3, 3, vec![2]), (3, 3, vec![3]), (3, 3, vec![2, 3])] {
        let config = Arc::new(GameConfig::single_ship(rows, cols, Color::Red, &lengths).unwrap());
        let programs: Vec<&str> = if rows == 2 { small.to_vec() } else { three.to_vec() };
        suite.push((PartialBoard::hidden(config.clone()), programs.clone()));
        suite.push((
            PartialBoard::with_revealed(config.clone(), &[(Coord::new(1, 1), Color::Water)]).unwrap(),
            programs.clone(),
        ));
        suite.push((PartialBoard::with_revealed(config.clone(), &[(Coord::new(2, 2), Color::Red)]).unwrap(), programs));
    }
    let config = Arc::new(
        GameConfig::new(
            3,
            3,
            vec![ShipSpec { id: Color::Red, lengths: vec![2] }, ShipSpec { id: Color::Blue, lengths: vec![2, 3] }],
        )
        .unwrap(),
    );
    suite.push((PartialBoard::hidden(config.clone()), two_ships.to_vec()));
    suite.push((
        PartialBoard::with_revealed(config.clone(), &[(Coord::new(2, 2), Color::Water)]).unwrap(),
        two_ships.to_vec(),
    ));
    suite.push((
        PartialBoard::hidden(Arc::new(config.as_ref().clone().with_distinct_lengths(true))),
        two_ships.to_vec(),
    ));
    suite
}

fn c3_oracle() -> Check {
    let mut spaces = 0;
    let mut checks = 0;
    for (board, programs) in oracle_suite() {
        let expected = oracle_boards(&board);
        if expected.len() > 200 {
            return Err(format!("suite space of {} boards exceeds 200", expected.len()));
        }
        let space = enumerate_hypotheses(&board).map_err(|e| e.to_string())?;
        if placement_sets(&space) != expected {
            return Err(format!("enumeration differs: {} vs oracle {}", space.len(), expected.len()));
        }
        spaces += 1;
        let config = space.config_arc().clone();
        let oracle_full: Vec<FullBoard> =
            expected.iter().map(|p| FullBoard::new(config.clone(), p.clone()).unwrap()).collect();
        for text in programs {
            let x = parse_program(text).map_err(|e| format!("{text}: {e}"))?;
            let answers: Vec<Value> = oracle_full
                .iter()
                .map(|b| evaluate(&x, b))
                .collect::<Result<_, _>>()
                .map_err(|e| format!("{text}: {e}"))?;
            let mut groups: BTreeMap<Value, Vec<Vec<Placement>>> = BTreeMap::new();
            for (y, p) in answers.iter().zip(&expected) {
                groups.entry(y.clone()).or_default().push(p.clone());
            }
            let counts: BTreeMap<Value, usize> = groups.iter().map(|(y, g)| (y.clone(), g.len())).collect();
            let got = eig(&x, &space).map_err(|e| format!("{text}: {e}"))?.bits;
            let want = oracle_eig(&counts, expected.len());
            if got != want {
                return Err(format!("{text}: eig {got} vs oracle {want}"));
            }
            let dist = answer_distribution(&x, &space).map_err(|e| e.to_string())?;
            for (y, members) in &groups {
                if dist.get(y) != Some(members.len() as f64 / expected.len() as f64) {
                    return Err(format!("{text}: p({y}) differs"));
                }
                let post = posterior_update(&space, &x, y).map_err(|e| e.to_string())?;
                if &placement_sets(&post) != members {
                    return Err(format!("{text}: posterior for {y} differs"));
                }
            }
            checks += 1;
        }
    }
    Ok(format!("{spaces} spaces, {checks} programs: counts, supports and eig identical"))
}

// ---------------------------------------------------------------- 4

fn c4_corpus() -> Check {
    let text = fs::read_to_string(fixture("corpus.txt")).map_err(|e| e.to_string())?;
    let programs: BTreeSet<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    if programs.len() < 40 {
        return Err(format!("only {} distinct programs", programs.len()));
    }
    let (_, board) = load_doc(&fixture("boards/example.json"));
    let space = enumerate_hypotheses(&board).map_err(|e| e.to_string())?;
    let mut rng = rng_from(derive_seed_str(4, "acceptance/corpus"));
    let sample: Vec<&FullBoard> = space.boards().choose_multiple(&mut rng, 200).collect();
    let mut lambdas = 0;
    let mut domain_errors = 0;
    for p in &programs {
        let x = parse_program(p).map_err(|e| format!("{p}: {e}"))?;
        check_question(&x).map_err(|e| format!("{p}: {e}"))?;
        let printed = x.to_string();
        if printed != *p || parse_program(&printed).map_err(|e| e.to_string())? != x {
            return Err(format!("{p} does not round-trip (printed {printed})"));
        }
        if p.contains("lambda") {
            lambdas += 1;
        }
        for b in &sample {
            match evaluate(&x, b) {
                Ok(_) => {}
                Err(e) if e.is_domain_error() => domain_errors += 1,
                Err(e) => return Err(format!("{p}: {e}")),
            }
        }
    }
    Ok(format!(
        "{} programs ({lambdas} with lambda) parse, typecheck, round-trip; no type errors on 200 boards ({domain_errors} domain errors)",
        programs.len()
    ))
}

// ---------------------------------------------------------------- 5

fn c5_golden() -> Check {
    let (target_id, target) = load_doc(&fixture("boards/target.json"));
    let rows = human_rows(&fixture("human.jsonl"));
    let pool: Vec<ShotBoard> = ["board_c", "board_d", "example"]
        .iter()
        .map(|name| {
            let (id, board) = load_doc(&fixture(&format!("boards/{name}.json")));
            let questions = rows.iter().filter(|r| r.board_id == id).map(|r| r.question.clone()).collect();
            ShotBoard { id, board, questions }
        })
        .collect();
    let mut files = 0;
    for mode in [PromptMode::ZeroShot, PromptMode::FewShot] {
        for format in [BoardFormat::Textual, BoardFormat::Grid, BoardFormat::NoBoard] {
            let mut rng = rng_from(derive_seed_str(7, &format!("prompt/{target_id}")));
            let bundle = build_generation_prompt(&target, &target_id, mode, format, &pool, &mut rng)
                .map_err(|e| e.to_string())?;
            let name = format!("golden/generation_{}_{}.txt", mode.name(), format.name());
            let golden = fs::read_to_string(fixture(&name)).map_err(|e| format!("{name}: {e}"))?;
            if encode_prepended(&bundle.messages) != golden {
                return Err(format!("{name} differs"));
            }
            let assistant = bundle.messages.iter().filter(|m| m.role.name() == "assistant").count();
            let expected_shots = if mode == PromptMode::FewShot { 30 } else { 0 };
            if assistant != expected_shots {
                return Err(format!("{name}: {assistant} example questions"));
            }
            let needle = match format {
                BoardFormat::Grid => Some("H: Hidden"),
                BoardFormat::Textual => Some("is a water tile."),
                BoardFormat::NoBoard => None,
            };
            if let Some(n) = needle {
                if !golden.contains(n) {
                    return Err(format!("{name}: missing {n:?}"));
                }
            }
            files += 1;
        }
    }
    let translation_pool: Vec<(String, QAExample)> = rows
        .iter()
        .map(|r| (r.board_id.clone(), QAExample::new(r.question.clone(), r.program.clone()).unwrap()))
        .collect();
    let mut rng = rng_from(derive_seed_str(7, &format!("translate/{target_id}")));
    let shots = sample_translation_examples(&translation_pool, &target_id, &mut rng).map_err(|e| e.to_string())?;
    let question = "Are there more horizontal ships than vertical ships?";
    let bundle = build_translation_prompt(question, &shots, target.config()).map_err(|e| e.to_string())?;
    let golden = fs::read_to_string(fixture("golden/translation.txt")).map_err(|e| e.to_string())?;
    if encode_prepended(&bundle.messages) != golden {
        return Err("golden/translation.txt differs".into());
    }
    if shots.len() != 12 || bundle.messages.len() != 1 + 2 * 12 + 1 {
        return Err("translation prompt does not hold 12 pairs".into());
    }
    let probe =
        PartialBoard::with_revealed(Arc::new(GameConfig::default()), &[(Coord::new(2, 3), Color::Water)]).unwrap();
    let text = render_for_prompt(&probe, BoardFormat::Textual).map_err(|e| e.to_string())?.unwrap_or_default();
    if !text.lines().any(|l| l == "2-C is a water tile.") {
        return Err(format!("textual rendering of a water tile at 2-C: {text:?}"));
    }
    Ok(format!("{} golden files byte-identical", files + 1))
}

// ---------------------------------------------------------------- 6

fn c6_pcfg() -> Check {
    let g = default_battleship_grammar();
    let cfg = SampleConfig::default();
    let mut rng = rng_from(derive_seed_str(6, "acceptance/pcfg"));
    let mut trace = Vec::new();
    for i in 0..10_000 {
        let x = sample_program_traced(&g, &cfg, &mut rng, &mut trace).map_err(|e| e.to_string())?;
        check_question(&x).map_err(|e| format!("sample {i} {x}: {e}"))?;
        if x.depth() == 1 {
            return Err(format!("sample {i} has depth 1: {x}"));
        }
        if x.to_string().contains("lambda") {
            return Err(format!("sample {i} has a lambda: {x}"));
        }
    }
    let mut counts: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
    for &(nt, prod) in &trace {
        let row = counts.entry(nt).or_insert_with(|| vec![0; g.productions(&g.nonterminals()[nt]).unwrap().len()]);
        row[prod] += 1;
    }
    let mut tested = 0;
    let mut min_p = 1.0f64;
    for (nt, observed) in &counts {
        let name = &g.nonterminals()[*nt];
        let prods = g.productions(name).unwrap();
        if prods.len() < 2 {
            continue;
        }
        let total: u64 = observed.iter().sum();
        let wsum: f64 = prods.iter().map(|p| p.weight()).sum();
        let expected: Vec<f64> = prods.iter().map(|p| total as f64 * p.weight() / wsum).collect();
        if expected.iter().any(|&e| e < 5.0) {
            continue;
        }
        let stat: f64 = observed.iter().zip(&expected).map(|(&o, &e)| (o as f64 - e).powi(2) / e).sum();
        let p = ChiSquared::new((prods.len() - 1) as f64).unwrap().sf(stat);
        min_p = min_p.min(p);
        if p < 0.001 {
            return Err(format!("{name}: chi-square {stat:.1}, p = {p:.2e}"));
        }
        tested += 1;
    }
    Ok(format!("10000 samples clean; {tested} nonterminals uniform (min p = {min_p:.3}) over {} draws", trace.len()))
}

// ---------------------------------------------------------------- 7

fn c7_dominance() -> Check {
    let (id, board) = load_doc(&fixture("boards/target.json"));
    let space = enumerate_hypotheses(&board).map_err(|e| e.to_string())?;
    let g = default_battleship_grammar();
    let cfg = SampleConfig::default();
    let mut rng = rng_from(derive_seed_str(7, "acceptance/dominance"));
    let raw: Vec<RawCandidate> =
        (0..500).map(|_| RawCandidate::program(sample_program(&g, &cfg, &mut rng).unwrap())).collect();
    let records: Vec<CandidateRecord> = score_candidates(&raw, &space, "grammar", &id);
    let ks = [1, 5, 10, 20, 50];
    let mut orders = 0;
    for trial in 0..300u64 {
        let means = aligned_dominance_means(&records, &ks, &mut sub_rng(7, trial)).ok_or("too few records")?;
        if means.windows(2).any(|w| w[0] > w[1]) {
            return Err(format!("order {trial}: {means:?}"));
        }
        orders += 1;
    }
    // Adversarial values: ties, zeros and tiny differences.
    let mut rng = rng_from(derive_seed_str(7, "acceptance/dominance-values"));
    for trial in 0..300 {
        let n = rng.random_range(50..400);
        let values: Vec<f64> = (0..n)
            .map(|_| match rng.random_range(0..4) {
                0 => 0.0,
                1 => 0.1 + 0.2,
                2 => rng.random::<f64>() * 1e-15,
                _ => rng.random::<f64>() * 5.17,
            })
            .collect();
        let means = nested_bucket_means(&values, &ks).ok_or("too few values")?;
        if means.windows(2).any(|w| w[0] > w[1]) {
            return Err(format!("value set {trial}: {means:?}"));
        }
        orders += 1;
    }
    Ok(format!("{orders} orders: mean(k=1) <= k=5 <= k=10 <= k=20 <= k=50"))
}

// ---------------------------------------------------------------- 8

#[derive(Deserialize)]
struct WelchFixture {
    a: Vec<f64>,
    b: Vec<f64>,
    t: f64,
    dof: f64,
    p: f64,
}

/// Welch's test from the textbook formulas, with the p-value from statrs.
fn reference_welch(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
        (n, m, v)
    };
    let (na, ma, va) = stats(a);
    let (nb, mb, vb) = stats(b);
    let (sa, sb) = (va / na, vb / nb);
    let t = (ma - mb) / (sa + sb).sqrt();
    let dof = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let p = 2.0 * StudentsT::new(0.0, 1.0, dof).unwrap().cdf(-t.abs());
    (t, dof, p)
}

/// Percentile bootstrap: replicate i resamples with `sub_rng(seed, i)`;
/// interval ends by linear interpolation between order statistics.
fn reference_bootstrap(values: &[f64], level: f64, n_boot: usize, seed: u64) -> (f64, f64) {
    let n = values.len();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut means: Vec<f64> = (0..n_boot)
        .map(|i| {
            let mut rng = sub_rng(seed, i as u64);
            let s: f64 = (0..n).map(|_| values[rng.random_range(0..n)]).sum();
            (s / n as f64).clamp(lo, hi)
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let pct = |q: f64| {
        let h = (n_boot - 1) as f64 * q;
        let (l, u) = (h.floor() as usize, h.ceil() as usize);
        means[l] + (h - l as f64) * (means[u] - means[l])
    };
    let alpha = (1.0 - level) / 2.0;
    (pct(alpha), pct(1.0 - alpha))
}

fn record(eig_bits: Option<f64>, depth: usize, size: usize, words: usize) -> CandidateRecord {
    CandidateRecord {
        proposal: "fixture".into(),
        board_id: "b".into(),
        index: 0,
        question: Some("q".into()),
        program: eig_bits.map(|_| "(size Red)".into()),
        raw_program: None,
        valid: eig_bits.is_some(),
        informative: eig_bits.is_some_and(|e| e > 0.0),
        eig_bits,
        question_type: None,
        depth: eig_bits.map(|_| depth),
        size: eig_bits.map(|_| size),
        word_count: Some(words),
        error: None,
    }
}

fn c8_statistics() -> Check {
    let pairs: Vec<WelchFixture> =
        serde_json::from_str(&fs::read_to_string(fixture("stats/welch_pairs.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    if pairs.len() != 20 {
        return Err(format!("{} fixture pairs", pairs.len()));
    }
    let mut worst = 0.0f64;
    for (i, pair) in pairs.iter().enumerate() {
        let got = welch_t_test(&pair.a, &pair.b).map_err(|e| e.to_string())?;
        let (t, dof, p) = reference_welch(&pair.a, &pair.b);
        for (label, x, y) in [
            ("t/scipy", got.t, pair.t),
            ("dof/scipy", got.dof, pair.dof),
            ("p/scipy", got.p, pair.p),
            ("t/statrs", got.t, t),
            ("dof/statrs", got.dof, dof),
            ("p/statrs", got.p, p),
        ] {
            let err = (x - y).abs();
            worst = worst.max(err);
            if err > 1e-6 {
                return Err(format!("pair {i} {label}: {x} vs {y}"));
            }
        }
        for (j, values) in [&pair.a, &pair.b].into_iter().enumerate() {
            let seed = 1000 + 2 * i as u64 + j as u64;
            let got = bootstrap_ci(values, 0.95, 2000, seed).map_err(|e| e.to_string())?;
            let want = reference_bootstrap(values, 0.95, 2000, seed);
            let err = (got.0 - want.0).abs().max((got.1 - want.1).abs());
            worst = worst.max(err);
            if err > 1e-6 {
                return Err(format!("pair {i} bootstrap: {got:?} vs {want:?}"));
            }
        }
    }

    // Hand-computed: each column has mean m and sample variance 3 over
    // three values, so the standard error is exactly 1.
    type Fixture = ([Option<f64>; 3], [usize; 3], [usize; 3], [usize; 3], [(f64, f64); 4]);
    let fixtures: [Fixture; 3] = [
        (
            [Some(1.0), Some(1.0), Some(4.0)],
            [3, 3, 6],
            [5, 5, 8],
            [4, 4, 7],
            [(2.0, 1.0), (4.0, 1.0), (6.0, 1.0), (5.0, 1.0)],
        ),
        (
            [Some(0.0), Some(3.0), Some(3.0)],
            [1, 4, 4],
            [2, 5, 5],
            [9, 6, 6],
            [(2.0, 1.0), (3.0, 1.0), (4.0, 1.0), (7.0, 1.0)],
        ),
        (
            [Some(2.5), Some(2.5), Some(2.5)],
            [2, 2, 2],
            [3, 3, 3],
            [6, 6, 6],
            [(2.5, 0.0), (2.0, 0.0), (3.0, 0.0), (6.0, 0.0)],
        ),
    ];
    for (i, (eigs, depth, size, words, want)) in fixtures.iter().enumerate() {
        let records: Vec<CandidateRecord> = (0..3).map(|j| record(eigs[j], depth[j], size[j], words[j])).collect();
        let row = summarize("fixture", 1, &records).map_err(|e| e.to_string())?;
        let got = [
            row.eig.map(|m| (m.mean, m.sem)),
            row.depth.map(|m| (m.mean, m.sem)),
            row.size.map(|m| (m.mean, m.sem)),
            row.words.map(|m| (m.mean, m.sem)),
        ];
        for (g, w) in got.iter().zip(want) {
            if *g != Some(*w) {
                return Err(format!("fixture {i}: {g:?} vs {w:?}"));
            }
        }
        let informative = if i == 1 { 2.0 / 3.0 } else { 1.0 };
        if row.valid.mean != 1.0 || row.valid.sem != 0.0 || row.informative.mean != informative {
            return Err(format!("fixture {i}: valid/informative {:?} {:?}", row.valid, row.informative));
        }
    }
    Ok(format!("20 Welch pairs and 40 bootstrap intervals within {worst:.1e}; 3 summaries exact"))
}

// ---------------------------------------------------------------- 9

/// Needs `LIPS_ACCEPT_BOARDS` (a directory of board files) and
/// `LIPS_ACCEPT_HUMAN` (JSONL of board_id, question, program). The board
/// id of the first trial can be set with `LIPS_ACCEPT_TRIAL1`.
fn c9_reproduction() -> Option<Check> {
    let boards_dir = std::env::var_os("LIPS_ACCEPT_BOARDS")?;
    let human = std::env::var_os("LIPS_ACCEPT_HUMAN")?;
    let trial1 = std::env::var("LIPS_ACCEPT_TRIAL1").unwrap_or_else(|_| "1".into());
    Some((|| {
        let mut boards = BTreeMap::new();
        let mut files: Vec<PathBuf> = fs::read_dir(&boards_dir)
            .map_err(|e| e.to_string())?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        for f in files {
            let (id, b) = load_doc(&f);
            boards.insert(id, b);
        }
        let rows = human_rows(Path::new(&human));
        let mut records = Vec::new();
        let mut spaces = BTreeMap::new();
        for (id, board) in &boards {
            let raw: Vec<RawCandidate> = rows
                .iter()
                .filter(|r| &r.board_id == id)
                .map(|r| RawCandidate {
                    question: Some(r.question.clone()),
                    program: parse_program(&r.program).map_err(|_| r.program.clone()),
                })
                .collect();
            if raw.is_empty() {
                continue;
            }
            let space = enumerate_hypotheses(board).map_err(|e| format!("{id}: {e}"))?;
            records.extend(score_candidates(&raw, &space, "human", id));
            spaces.insert(id.clone(), space);
        }
        let row = summarize("human", 1, &records).map_err(|e| e.to_string())?;
        let eig_mean = row.eig.map_or(f64::NAN, |m| m.mean);
        let depth_mean = row.depth.map_or(f64::NAN, |m| m.mean);
        let mut notes = vec![
            format!("EIG {eig_mean:.3} (1.27)"),
            format!("informative {:.3} (0.97)", row.informative.mean),
            format!("depth {depth_mean:.3} (3.22)"),
        ];
        let mut ok = (eig_mean - 1.27).abs() <= 0.05
            && (row.informative.mean - 0.97).abs() <= 0.02
            && (depth_mean - 3.22).abs() <= 0.1;
        if let Some(space) = spaces.get(&trial1) {
            for (program, want) in [("(size Blue)", 1.36), ("(topleft (coloredTiles Red))", 4.67)] {
                let bits = eig(&parse_program(program).unwrap(), space).map_err(|e| e.to_string())?.bits;
                notes.push(format!("trial {trial1} {program} {bits:.2} ({want})"));
                ok &= (bits - want).abs() <= 0.05;
            }
        } else {
            notes.push(format!("no board {trial1:?} for spot checks"));
        }
        if ok {
            Ok(notes.join("; "))
        } else {
            Err(notes.join("; "))
        }
    })())
}

// ---------------------------------------------------------------- 10

fn run_lips(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_lips"))
        .args(args)
        .current_dir(root())
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn c10_determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = 0;
    for (name, extra) in [
        (
            "llm",
            vec![
                "--proposal",
                "llm",
                "--replay",
                "fixtures/replay/llm_two_boards.jsonl",
                "--examples",
                "fixtures/human.jsonl",
                "--example-boards",
                "fixtures/boards",
                "--n",
                "20",
                "--k",
                "1,5,10,20",
            ],
        ),
        ("grammar", vec!["--proposal", "grammar", "--n", "60", "--k", "1,5,10,20,50"]),
    ] {
        let mut dirs = Vec::new();
        for rep in 0..2 {
            let out = tmp.path().join(format!("{name}-{rep}"));
            let out_s = out.to_string_lossy().into_owned();
            let mut args = vec![
                "run",
                "--boards",
                "fixtures/boards/example.json",
                "fixtures/boards/target.json",
                "--seed",
                "11",
                "--out",
                &out_s,
            ];
            args.extend(extra.iter().copied());
            run_lips(&args)?;
            dirs.push(tree(&out));
        }
        if dirs[0] != dirs[1] {
            let differing: Vec<_> = dirs[0]
                .iter()
                .filter(|(k, v)| dirs[1].get(*k) != Some(*v))
                .map(|(k, _)| k.display().to_string())
                .collect();
            return Err(format!("{name} runs differ in {differing:?}"));
        }
        if !dirs[0].contains_key(Path::new("manifest.json")) {
            return Err(format!("{name} run wrote no manifest"));
        }
        files += dirs[0].len();
    }
    Ok(format!("replay and grammar runs byte-identical ({files} files)"))
}

fn main() -> ExitCode {
    type Criterion = Box<dyn Fn() -> Outcome>;
    let criteria: Vec<(&str, Criterion)> = vec![
        ("eig identity", Box::new(|| c1_eig_identity().into())),
        ("binary split", Box::new(|| c2_binary_split().into())),
        ("brute-force oracle", Box::new(|| c3_oracle().into())),
        ("program corpus", Box::new(|| c4_corpus().into())),
        ("prompt golden files", Box::new(|| c5_golden().into())),
        ("grammar sampling", Box::new(|| c6_pcfg().into())),
        ("bucketing dominance", Box::new(|| c7_dominance().into())),
        ("statistics oracle", Box::new(|| c8_statistics().into())),
        (
            "human reproduction",
            Box::new(|| match c9_reproduction() {
                Some(r) => r.into(),
                None => Outcome::Skip("set LIPS_ACCEPT_BOARDS and LIPS_ACCEPT_HUMAN to run".into()),
            }),
        ),
        ("run determinism", Box::new(|| c10_determinism().into())),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match check() {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("criterion {:>2} {tag} {name}: {detail} [{:.1}s]", i + 1, start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

impl From<Check> for Outcome {
    fn from(c: Check) -> Outcome {
        match c {
            Ok(d) => Outcome::Pass(d),
            Err(d) => Outcome::Fail(d),
        }
    }
}
