//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. `cargo test -p leadsheet-cli --test acceptance`.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use leadsheet_core::challenge::{
    build_questions, run_challenge, ChallengeQuestion, NGramConfig, NGramModel, OracleModel, ScoringMode, UniformModel,
};
use leadsheet_core::corpus::{save_corpus, Solo};
use leadsheet_core::metrics::{
    chord_progression_irregularity, grooving_pattern, grooving_similarity, histogram_entropy, PitchClassHistogram,
};
use leadsheet_core::structure::{
    compute_ssm, render_chroma, scape_plot, scape_plot_with, segment_fitness_detail, structureness_indicator, Ssm,
    SsmParams,
};
use leadsheet_core::synth::{aaba_solo, half_note_bar, key_cycle_corpus, random_corpus, through_composed_solo};
use leadsheet_core::tokenizer::quantize::{tempo_from_bpm, POSITIONS_PER_BAR};
use leadsheet_core::tokenizer::{
    decode_tokens, derive_tempo_events, encode_solo, justify_position, parse_chord, quantize_duration,
    quantize_velocity, solo_timeline, velocity_to_midi, VocabConfig, Vocabulary, CHORD_TYPES,
};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FORMULA_TIME_LIMIT: Duration = Duration::from_secs(1);
const CODEC_SOLOS: usize = 50;
const CHORD_FUZZ_SYMBOLS: usize = 200;
const CHORD_VOCAB: usize = 71;
const ENTROPY_TOL: f64 = 1e-9;
const CPI_TOL: f64 = 0.01;
const ORACLE_SSMS: usize = 120;
const ORACLE_MAX_N: usize = 10;
const FITNESS_TOL: f64 = 1e-6;
const SCAPE_N: usize = 200;
const SCAPE_TIME_LIMIT: Duration = Duration::from_secs(60);
const SI_GAP: f64 = 0.3;
const ORACLE_QUESTIONS: usize = 100;
const UNIFORM_QUESTIONS: usize = 1000;
const NGRAM_QUESTIONS: usize = 200;
const NGRAM_MIN_ACCURACY: f64 = 0.6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// 1 -------------------------------------------------------------------------

fn formula_exactness() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut check = |what: &str, ok: bool| {
        if !ok {
            failures.push(what.to_string());
        }
    };
    for (db, v) in [(65.0, 20), (30.0, 1), (90.0, 32)] {
        check(&format!("velocity({db})"), quantize_velocity(db).ok() == Some(v));
    }
    for (v, midi) in [(1, 3), (32, 127), (20, 79)] {
        check(&format!("velocity_to_midi({v})"), velocity_to_midi(v).ok() == Some(midi));
    }
    for (note, beat, units) in [(0.5, 0.5, Some(16)), (1.5, 0.5, Some(32)), (0.5 / 40.0, 0.5, None)] {
        check(&format!("duration({note},{beat})"), quantize_duration(note, beat).ok() == Some(units));
    }
    for (pb, tb, db, tn, p) in [(32, 2.0, 0.5, 2.0, 32), (16, 1.0, 0.5, 1.25, 24), (48, 3.0, 0.6, 3.33, 57)] {
        check(&format!("position({pb},{tb},{db},{tn})"), justify_position(pb, tb, db, tn).ok() == Some(p));
    }
    let t = derive_tempo_events(0.5).unwrap();
    check("tempo(0.5s)", (t.class, t.step()) == (3, 4));
    for bpm in [50.0, 49.0] {
        let t = tempo_from_bpm(bpm);
        check(&format!("tempo({bpm} bpm)"), (t.class, t.step(), t.bpm()) == (1, 0, 50.0));
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < FORMULA_TIME_LIMIT;
    outcome(pass, format!("{} mismatches {:?}, {:.3} ms", failures.len(), failures, elapsed.as_secs_f64() * 1e3))
}

// 2 -------------------------------------------------------------------------

/// (bar, position, units, velocity bin, pitch)
type NoteKey = (usize, u8, u8, u8, u8);

/// Expected notes and dropped indices, straight from the solo.
fn expected_notes(solo: &Solo) -> (Vec<NoteKey>, Vec<usize>) {
    let mut bar_of = Vec::new();
    for (i, b) in solo.beats.iter().enumerate() {
        let prev = bar_of.last().copied().unwrap_or(0);
        bar_of.push(if i > 0 && b.bar_index != solo.beats[i - 1].bar_index { prev + 1 } else { prev });
    }
    let (mut kept, mut dropped) = (Vec::new(), Vec::new());
    for (n, note) in solo.notes.iter().enumerate() {
        let k = solo.beats.iter().rposition(|b| b.onset_sec <= note.onset_sec).unwrap_or(0);
        let beat = &solo.beats[k];
        let units = (16.0 * note.duration_sec / beat.duration_sec).round();
        if units < 1.0 {
            dropped.push(n);
            continue;
        }
        let pos = 16.0 * beat.position_in_bar as f64 + 16.0 * (note.onset_sec - beat.onset_sec) / beat.duration_sec;
        let vel = ((80.0 + 3.0 * (note.loudness_db - 65.0)) / 4.0).floor().clamp(1.0, 32.0) as u8;
        kept.push((bar_of[k], pos.round().clamp(0.0, 63.0) as u8, units.min(32.0) as u8, vel, note.pitch as u8));
    }
    kept.sort();
    (kept, dropped)
}

fn codec_round_trip() -> Outcome {
    let vocab = Vocabulary::new(VocabConfig::default());
    let corpus = random_corpus(2024, CODEC_SOLOS, 32);
    let (mut mismatches, mut notes, mut drops, mut wrong_drops) = (0usize, 0usize, 0usize, 0usize);
    for solo in &corpus {
        let enc = encode_solo(solo, &vocab, true).unwrap();
        let tl = decode_tokens(&enc.tokens).unwrap();
        let mut got: Vec<_> =
            tl.notes.iter().map(|n| (n.bar, n.position, n.duration_units, n.velocity_bin, n.pitch)).collect();
        got.sort();
        let (want, dropped) = expected_notes(solo);
        notes += want.len();
        drops += dropped.len();
        if dropped != enc.dropped_notes {
            wrong_drops += 1;
        }
        if got.len() != want.len() {
            mismatches += got.len().abs_diff(want.len());
        }
        mismatches += got.iter().zip(&want).filter(|(a, b)| a != b).count();
    }
    outcome(
        mismatches == 0 && wrong_drops == 0,
        format!("{CODEC_SOLOS} solos, {notes} notes, {mismatches} mismatches, {drops} sub-64th drops, {wrong_drops} solos with unexpected drops"),
    )
}

// 3 -------------------------------------------------------------------------

fn chord_coverage() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let roots: Vec<String> =
        ["C", "D", "E", "F", "G", "A", "B"].iter().flat_map(|l| ["", "#", "b"].map(|a| format!("{l}{a}"))).collect();
    let qualities: Vec<(&str, &str)> =
        CHORD_TYPES.iter().flat_map(|t| t.spellings().map(move |s| (s, t.name))).collect();
    let mut failures = Vec::new();
    for _ in 0..CHORD_FUZZ_SYMBOLS {
        let root = roots.choose(&mut rng).unwrap();
        let (spelling, name) = *qualities.choose(&mut rng).unwrap();
        let symbol = if rng.random_bool(0.3) {
            format!("{root}{spelling}/{}", roots.choose(&mut rng).unwrap())
        } else {
            format!("{root}{spelling}")
        };
        match parse_chord(&symbol) {
            Ok(c) if c.kind.template().name == name => {}
            other => failures.push(format!("{symbol}: {other:?}")),
        }
    }
    let size = Vocabulary::new(VocabConfig::default()).chord_token_count();
    outcome(
        failures.is_empty() && size == CHORD_VOCAB,
        format!("{} of {CHORD_FUZZ_SYMBOLS} symbols failed {:?}; chord vocabulary {size}", failures.len(), failures),
    )
}

// 4 -------------------------------------------------------------------------

fn metric_identities() -> Outcome {
    let h = histogram_entropy(&PitchClassHistogram { h: [1.0 / 12.0; 12] }).unwrap();
    let a = grooving_pattern((0..POSITIONS_PER_BAR).step_by(2));
    // 16 of the 32 onsets moved to odd positions: Hamming distance 16
    let b = grooving_pattern(
        (0..POSITIONS_PER_BAR).step_by(2).enumerate().map(|(i, p)| if i % 4 == 0 { p + 1 } else { p }),
    );
    let gs = grooving_similarity(&a, &b).unwrap();
    let cpi1 = chord_progression_irregularity(&["C7", "F7", "C7", "C7", "F7", "C7"]).unwrap();
    let cpi2 = chord_progression_irregularity(&["C7"; 5]).unwrap();
    let pass = (h - 12f64.log2()).abs() <= ENTROPY_TOL
        && gs == 0.75
        && (cpi1 - 75.0).abs() <= CPI_TOL
        && (cpi2 - 33.33).abs() <= CPI_TOL;
    outcome(pass, format!("H(uniform)={h:.12}, GS={gs}, CPI={cpi1:.4}/{cpi2:.4}"))
}

// 5 -------------------------------------------------------------------------

fn paths_from(row: usize, n: usize, m: usize) -> Vec<Vec<(usize, usize)>> {
    fn extend(cells: &mut Vec<(usize, usize)>, n: usize, m: usize, out: &mut Vec<Vec<(usize, usize)>>) {
        let (r, c) = *cells.last().unwrap();
        if c == m - 1 {
            out.push(cells.clone());
            return;
        }
        for (dr, dc) in [(1, 1), (2, 1), (1, 2)] {
            if r + dr < n && c + dc < m {
                cells.push((r + dr, c + dc));
                extend(cells, n, m, out);
                cells.pop();
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut vec![(row, 0)], n, m, &mut out);
    out
}

/// Fitness values of every optimal path family, by exhaustive enumeration.
fn brute_force_fitness(ssm: &Ssm, s: usize, e: usize) -> (f64, Vec<f64>) {
    let (n, m) = (ssm.len(), e - s + 1);
    let paths: Vec<Vec<Vec<(usize, usize)>>> = (0..n).map(|r| paths_from(r, n, m)).collect();
    let mut families = Vec::new();
    let mut stack = vec![(0usize, 0.0f64, 0usize, 0usize)];
    while let Some((row, score, len, cov)) = stack.pop() {
        families.push((score, len, cov));
        for (start, ps) in paths.iter().enumerate().skip(row) {
            for p in ps {
                let end = p.last().unwrap().0;
                let sc: f64 = p.iter().map(|&(r, c)| ssm.get(r, s + c)).sum();
                stack.push((end + 1, score + sc, len + p.len(), cov + end - start + 1));
            }
        }
    }
    let best = families.iter().map(|f| f.0).fold(f64::NEG_INFINITY, f64::max);
    let fits = families
        .iter()
        .filter(|f| (f.0 - best).abs() < 1e-9)
        .map(|&(score, len, cov)| {
            if len == 0 {
                return 0.0;
            }
            let sn = (score - m as f64) / len as f64;
            let cn = (cov as f64 - m as f64) / n as f64;
            if sn <= 0.0 || cn <= 0.0 {
                0.0
            } else {
                2.0 * sn * cn / (sn + cn)
            }
        })
        .collect();
    (best, fits)
}

fn scape_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut segments, mut disagreements) = (0usize, 0usize);
    for i in 0..ORACLE_SSMS {
        let n = 2 + i % (ORACLE_MAX_N - 1);
        let symbols: Vec<u8> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let mut rows = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in a..n {
                let v = if a == b {
                    1.0
                } else if symbols[a] == symbols[b] || rng.random_bool(0.3) {
                    rng.random_range(0.2..1.0)
                } else {
                    -2.0
                };
                rows[a][b] = v;
                rows[b][a] = v;
            }
        }
        let ssm = Ssm::from_rows(rows);
        for s in 0..n {
            for e in s..n {
                segments += 1;
                let d = segment_fitness_detail(&ssm, s, e).unwrap();
                let (best, fits) = brute_force_fitness(&ssm, s, e);
                if (d.score - best).abs() > FITNESS_TOL || !fits.iter().any(|f| (f - d.fitness).abs() <= FITNESS_TOL) {
                    disagreements += 1;
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let solo = through_composed_solo(&mut rng, "long", SCAPE_N / 2, 120.0, half_note_bar);
    let tl = solo_timeline(&solo, &Vocabulary::new(VocabConfig::default())).unwrap();
    let ssm = compute_ssm(&render_chroma(&tl, 1.0).unwrap(), &SsmParams::default()).unwrap();
    let start = Instant::now();
    let plot = scape_plot_with(&ssm, 1).unwrap();
    let elapsed = start.elapsed();
    let pass = disagreements == 0 && ssm.len() == SCAPE_N && plot.len() == SCAPE_N && elapsed < SCAPE_TIME_LIMIT;
    outcome(
        pass,
        format!(
            "{ORACLE_SSMS} SSMs (N<={ORACLE_MAX_N}), {segments} segments, {disagreements} disagreements; N={} full grid in {:.2} s",
            ssm.len(),
            elapsed.as_secs_f64()
        ),
    )
}

// 6 -------------------------------------------------------------------------

fn si_band(solo: &Solo) -> f64 {
    let tl = solo_timeline(solo, &Vocabulary::new(VocabConfig::default())).unwrap();
    let ssm = compute_ssm(&render_chroma(&tl, 1.0).unwrap(), &SsmParams::default()).unwrap();
    structureness_indicator(&scape_plot(&ssm).unwrap(), 8, Some(15)).unwrap()
}

fn structureness_discrimination() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pieces = 20;
    let section = 6;
    let aaba: Vec<Solo> =
        (0..pieces).map(|i| aaba_solo(&mut rng, &format!("aaba{i}"), section, 120.0, half_note_bar)).collect();
    let random: Vec<Solo> = (0..pieces)
        .map(|i| through_composed_solo(&mut rng, &format!("rand{i}"), 4 * section, 120.0, half_note_bar))
        .collect();
    let mean = |c: &[Solo]| c.iter().map(si_band).sum::<f64>() / c.len() as f64;
    let (a, r) = (mean(&aaba), mean(&random));
    outcome(a - r >= SI_GAP, format!("mean SI8_15 AABA {a:.4} vs random {r:.4}, gap {:.4}", a - r))
}

// 7 -------------------------------------------------------------------------

fn encode_ids(solos: &[Solo], vocab: &Vocabulary) -> Vec<Vec<u32>> {
    solos.iter().map(|s| vocab.ids(&encode_solo(s, vocab, false).unwrap().tokens).unwrap()).collect()
}

fn accuracy(model: &dyn leadsheet_core::challenge::SequenceModel, qs: &[ChallengeQuestion]) -> f64 {
    run_challenge(model, qs, ScoringMode::TeacherForced).unwrap().accuracy
}

fn challenge_calibration() -> Vec<(String, Outcome)> {
    let vocab = Vocabulary::new(VocabConfig::default());
    let v = vocab.len();
    let corpus = encode_ids(&random_corpus(77, 30, 40), &vocab);
    let oracle_qs = build_questions(&corpus, vocab.bar_id(), ORACLE_QUESTIONS, 1).unwrap();
    let oracle = accuracy(&OracleModel::new(corpus.clone(), v), &oracle_qs);

    let uniform_qs = build_questions(&corpus, vocab.bar_id(), UNIFORM_QUESTIONS, 2).unwrap();
    let uniform = accuracy(&UniformModel::new(v), &uniform_qs);
    let half = 1.959_963_984_540_054 * (0.25f64 * 0.75 / UNIFORM_QUESTIONS as f64).sqrt();
    let (lo, hi) = (0.25 - half, 0.25 + half);

    let cycle = encode_ids(&key_cycle_corpus(4, 20), &vocab);
    let ngram = NGramModel::train(&cycle, v, NGramConfig { order: 5, alpha: 0.01 }).unwrap();
    let cycle_qs = build_questions(&cycle, vocab.bar_id(), NGRAM_QUESTIONS, 3).unwrap();
    let ngram_acc = accuracy(&ngram, &cycle_qs);
    let uniform_on_cycle = accuracy(&UniformModel::new(v), &cycle_qs);

    vec![
        ("7a oracle".into(), outcome(oracle == 1.0, format!("accuracy {oracle:.4} on {ORACLE_QUESTIONS} questions"))),
        (
            "7b uniform".into(),
            outcome(
                (lo..=hi).contains(&uniform),
                format!("accuracy {uniform:.4} on {UNIFORM_QUESTIONS} questions, 95% interval [{lo:.4}, {hi:.4}]"),
            ),
        ),
        (
            "7c n-gram".into(),
            outcome(
                ngram_acc >= NGRAM_MIN_ACCURACY && ngram_acc > uniform_on_cycle,
                format!(
                    "5-gram accuracy {ngram_acc:.4} vs uniform {uniform_on_cycle:.4} on {NGRAM_QUESTIONS} questions"
                ),
            ),
        ),
    ]
}

// 8, 9 ----------------------------------------------------------------------

fn run_cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_leadsheet")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn determinism(dir: &Path, corpus: &str) -> Result<Outcome, String> {
    let d = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let pgm = d("pgm");
    let mut same = true;
    let mut report = Vec::new();
    for out in ["r1.tsv", "r2.tsv"] {
        run_cli(&["report", "--corpus", corpus, "--pgm-dir", &pgm, "--out", &d(out)])?;
        let mut images: Vec<(String, Vec<u8>)> = fs::read_dir(&pgm)
            .map_err(|e| e.to_string())?
            .map(|e| e.map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        images.sort();
        report.push(images);
    }
    same &= report[0] == report[1] && !report[0].is_empty();
    same &= fs::read(d("r1.tsv")).unwrap() == fs::read(d("r2.tsv")).unwrap();
    for out in ["c1.tsv", "c2.tsv"] {
        run_cli(&[
            "challenge",
            "--corpus",
            corpus,
            "--no-structure",
            "--questions",
            "50",
            "--seed",
            "4",
            "--out",
            &d(out),
        ])?;
    }
    same &= fs::read(d("c1.tsv")).unwrap() == fs::read(d("c2.tsv")).unwrap();
    Ok(outcome(same, "report (table + PGMs) and challenge outputs compared byte for byte across two runs"))
}

fn completeness(corpus: &str) -> Result<Outcome, String> {
    let text = run_cli(&["report", "--corpus", corpus])?;
    let header: Vec<&str> = text.lines().find(|l| l.starts_with("piece_id")).ok_or("no header")?.split('\t').collect();
    let mean: Vec<&str> = text.lines().find(|l| l.starts_with("MEAN")).ok_or("no MEAN row")?.split('\t').collect();
    let stats = ["H1", "H4", "GS", "CPI", "SI3_8", "SI8_15", "SI15"];
    let missing: Vec<&str> = stats
        .iter()
        .copied()
        .filter(|s| header.iter().position(|h| h == s).is_none_or(|i| mean[i].parse::<f64>().is_err()))
        .collect();
    Ok(outcome(
        missing.is_empty(),
        format!("{} statistics with a corpus mean; missing {missing:?}", stats.len() - missing.len()),
    ))
}

fn main() {
    let dir = tempfile::TempDir::new().expect("temp dir");
    let corpus_path = dir.path().join("corpus.jsonl");
    save_corpus(&corpus_path, &random_corpus(11, 12, 40)).expect("write corpus");
    let corpus = corpus_path.to_string_lossy().into_owned();

    let mut results: Vec<(String, Outcome)> = vec![
        ("1 formula exactness".into(), formula_exactness()),
        ("2 codec round-trip".into(), codec_round_trip()),
        ("3 chord coverage".into(), chord_coverage()),
        ("4 metric identities".into(), metric_identities()),
        ("5 scape-plot oracle".into(), scape_oracle()),
        ("6 structureness discrimination".into(), structureness_discrimination()),
    ];
    results.extend(challenge_calibration());
    let cli = |r: Result<Outcome, String>| r.unwrap_or_else(|e| outcome(false, format!("command failed: {e}")));
    results.push(("8 determinism".into(), cli(determinism(dir.path(), &corpus))));
    results.push(("9 pipeline completeness".into(), cli(completeness(&corpus))));

    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
