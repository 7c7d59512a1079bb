//! Subcommand implementations.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process;

use anyhow::{bail, ensure, Context, Result};
use leadsheet_core::challenge::{
    build_questions, generate_tokens, run_challenge, ExternalModel, GenerationConfig, NGramConfig, NGramModel,
    OracleModel, ScoringMode, SequenceModel, UniformModel,
};
use leadsheet_core::corpus::solo_stats;
use leadsheet_core::metrics::distribution_metrics;
use leadsheet_core::structure::{
    compute_ssm, default_stride, render_chroma, scape_plot_with, structureness_indicator, write_pgm_annotated,
    write_text_matrix, ScapePlot, SsmParams,
};
use leadsheet_core::tokenizer::midi::timeline_to_midi_with_text;
use leadsheet_core::tokenizer::stream::{read_tokens, tokens_to_string};
use leadsheet_core::tokenizer::{decode_tokens, encode_solo, EventToken, Timeline, Vocabulary};

use crate::inputs::{ensure_dir, file_name, InputArgs, Piece};
use crate::provenance::{InputDigest, RunConfig};
use crate::{
    ChallengeArgs, DetokenizeArgs, GenerateArgs, Mode, ModelArgs, ModelKind, ReportArgs, ScapeArgs, StructureArgs,
    TokenizeArgs, TrainArgs,
};

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"))
}

fn decode_piece(piece: &Piece) -> Result<Timeline> {
    decode_tokens(&piece.tokens).with_context(|| format!("decoding piece {}", piece.id))
}

fn piece_ids(pieces: &[Piece], vocab: &Vocabulary) -> Result<Vec<Vec<u32>>> {
    pieces
        .iter()
        .map(|p| {
            vocab.ids(&p.tokens).map_err(|t| anyhow::anyhow!("piece {}: token {t} is not in the vocabulary", p.id))
        })
        .collect()
}

fn unique_names<'a>(ids: impl Iterator<Item = &'a str>) -> Result<Vec<String>> {
    let mut seen = BTreeSet::new();
    ids.map(|id| {
        let name = file_name(id);
        ensure!(seen.insert(name.clone()), "two pieces map to the file name {name:?}");
        Ok(name)
    })
    .collect()
}

pub fn tokenize(a: &TokenizeArgs) -> Result<()> {
    let mut digest = InputDigest::default();
    let vocab = a.input.vocabulary(&mut digest)?;
    let solos = a.input.solos(&mut digest)?;
    let mut config = RunConfig::new("tokenize");
    a.input.record(&mut config);
    config.set("out", a.out.display()).set_inputs(digest.hex());
    let header = config.header();
    ensure_dir(&a.out)?;

    let names = unique_names(solos.iter().map(|s| s.id.as_str()))?;
    let mut per_solo = header.clone();
    per_solo.push_str("id\tnotes\tdropped_notes\tbeats\tbars\tduration_sec\tevents\n");
    let (mut total_events, mut total_sec) = (0usize, 0.0f64);
    for (solo, name) in solos.iter().zip(&names) {
        let enc =
            encode_solo(solo, &vocab, !a.input.no_structure).with_context(|| format!("encoding solo {}", solo.id))?;
        let mut text = header.clone();
        writeln!(text, "# piece={}", solo.id)?;
        text.push_str(&tokens_to_string(&enc.tokens));
        write_file(&a.out.join(format!("{name}.tokens")), text.as_bytes())?;
        let stats = solo_stats(solo);
        writeln!(
            per_solo,
            "{}\t{}\t{}\t{}\t{}\t{:.6}\t{}",
            solo.id,
            stats.notes,
            enc.dropped_notes.len(),
            stats.beats,
            stats.bars,
            stats.duration_sec,
            enc.tokens.len()
        )?;
        total_events += enc.tokens.len();
        total_sec += stats.duration_sec;
    }
    write_file(&a.out.join("solos.tsv"), per_solo.as_bytes())?;

    let mut sidecar = header.clone().into_bytes();
    vocab.write_sidecar(&mut sidecar)?;
    write_file(&a.out.join("vocab.txt"), &sidecar)?;

    let minutes = (total_sec / 60.0).round() as u64;
    let mut summary = header;
    let columns = "solos\ttotal_duration_sec\ttotal_duration\ttotal_events\tavg_events_per_solo\n";
    summary.push_str(columns);
    let row = format!(
        "{}\t{:.6}\t{}h {}m\t{}\t{:.1}\n",
        solos.len(),
        total_sec,
        minutes / 60,
        minutes % 60,
        total_events,
        total_events as f64 / solos.len() as f64
    );
    summary.push_str(&row);
    write_file(&a.out.join("summary.tsv"), summary.as_bytes())?;
    print!("{columns}{row}");
    Ok(())
}

pub fn detokenize(a: &DetokenizeArgs) -> Result<()> {
    let mut digest = InputDigest::default();
    let vocab = a.input.vocabulary(&mut digest)?;
    let pieces = a.input.pieces(&vocab, &mut digest)?;
    let mut config = RunConfig::new("detokenize");
    a.input.record(&mut config);
    config.set("out", a.out.display()).set_inputs(digest.hex());
    ensure_dir(&a.out)?;
    let names = unique_names(pieces.iter().map(|p| p.id.as_str()))?;
    for (piece, name) in pieces.iter().zip(names) {
        let timeline = decode_piece(piece)?;
        let text = format!("{}; piece={}", config.one_line(), piece.id);
        write_file(&a.out.join(format!("{name}.mid")), &timeline_to_midi_with_text(&timeline, Some(&text)))?;
    }
    Ok(())
}

struct StructureSettings {
    params: SsmParams,
    frame_rate: f64,
    stride: Option<usize>,
}

impl StructureArgs {
    fn settings(&self, config: &mut RunConfig) -> Result<StructureSettings> {
        ensure!(self.frame_rate > 0.0 && self.frame_rate.is_finite(), "--frame-rate must be positive");
        ensure!(self.tau.is_finite() && self.delta.is_finite(), "--tau and --delta must be finite");
        let stride = match self.stride.as_str() {
            "auto" => None,
            s => {
                let n: usize = s.parse().with_context(|| format!("--stride {s:?} is neither auto nor a number"))?;
                ensure!(n >= 1, "--stride must be at least 1");
                Some(n)
            }
        };
        config
            .set("ssm_threshold", self.tau)
            .set("ssm_penalty", self.delta)
            .set("frame_rate_hz", self.frame_rate)
            .set("stride", &self.stride)
            .set("chroma_weights", "melody=1.0,chord=0.5");
        Ok(StructureSettings {
            params: SsmParams { threshold: self.tau, penalty: self.delta },
            frame_rate: self.frame_rate,
            stride,
        })
    }
}

fn plot_for(timeline: &Timeline, s: &StructureSettings) -> Option<ScapePlot> {
    let chroma = render_chroma(timeline, s.frame_rate).ok()?;
    let ssm = compute_ssm(&chroma, &s.params).ok()?;
    let stride = s.stride.unwrap_or_else(|| default_stride(ssm.len()));
    scape_plot_with(&ssm, stride).ok()
}

type Corpus = Vec<Vec<u32>>;
type Band = (usize, Option<usize>);

fn parse_bands(specs: &[String]) -> Result<Vec<(String, Band)>> {
    specs
        .iter()
        .map(|spec| {
            let (lo, hi) = spec.split_once('-').with_context(|| format!("band {spec:?} is not lower-upper"))?;
            let lo: usize = lo.trim().parse().with_context(|| format!("band {spec:?}"))?;
            let hi: Option<usize> = match hi.trim() {
                "" => None,
                h => Some(h.parse().with_context(|| format!("band {spec:?}"))?),
            };
            ensure!(lo >= 1 && hi.is_none_or(|h| h >= lo), "band {spec:?} is empty");
            let name = match hi {
                Some(h) => format!("SI{lo}_{h}"),
                None => format!("SI{lo}"),
            };
            Ok((name, (lo, hi)))
        })
        .collect()
}

pub fn report(a: &ReportArgs) -> Result<()> {
    let mut digest = InputDigest::default();
    let vocab = a.input.vocabulary(&mut digest)?;
    let mut pieces = a.input.pieces(&vocab, &mut digest)?;
    pieces.sort_by(|x, y| x.id.cmp(&y.id));
    let bands = parse_bands(&a.bands)?;
    let mut config = RunConfig::new("report");
    a.input.record(&mut config);
    let settings = a.structure.settings(&mut config)?;
    config
        .set("bands", a.bands.join(","))
        .set("entropy_windows_bars", "1,4 (hop 1 bar, empty windows skipped)")
        .set("grooving_pairs", "all bar pairs, empty bars included")
        .set("cpi_collapse_repeats", true)
        .set("pgm_dir", a.pgm_dir.as_ref().map_or("-".into(), |p| p.display().to_string()))
        .set_inputs(digest.hex());
    if let Some(dir) = &a.pgm_dir {
        ensure_dir(dir)?;
    }
    let names = if a.pgm_dir.is_some() { unique_names(pieces.iter().map(|p| p.id.as_str()))? } else { vec![] };

    let mut text = config.header();
    let si_names: Vec<&str> = bands.iter().map(|(n, _)| n.as_str()).collect();
    writeln!(text, "piece_id\tbars\tframes\tH1\tH4\tGS\tCPI\t{}", si_names.join("\t"))?;
    let columns = 4 + bands.len();
    let mut sums = vec![(0.0, 0usize); columns];
    for (i, piece) in pieces.iter().enumerate() {
        let timeline = decode_piece(piece)?;
        let m = distribution_metrics(&timeline);
        let plot = plot_for(&timeline, &settings);
        let mut values = vec![m.h1, m.h4, m.gs, m.cpi];
        values.extend(
            bands.iter().map(|(_, (lo, hi))| plot.as_ref().and_then(|p| structureness_indicator(p, *lo, *hi).ok())),
        );
        for (sum, v) in sums.iter_mut().zip(&values) {
            if let Some(v) = v {
                sum.0 += v;
                sum.1 += 1;
            }
        }
        let cells: Vec<String> = values.iter().map(|v| fmt_opt(*v)).collect();
        writeln!(
            text,
            "{}\t{}\t{}\t{}",
            piece.id,
            timeline.bars,
            plot.as_ref().map_or(0, |p| p.len()),
            cells.join("\t")
        )?;
        if let (Some(dir), Some(plot)) = (&a.pgm_dir, &plot) {
            let mut comments = config.lines();
            comments.push(format!("piece={}", piece.id));
            let mut bytes = Vec::new();
            write_pgm_annotated(&mut bytes, plot, &comments)?;
            write_file(&dir.join(format!("{}.pgm", names[i])), &bytes)?;
        }
    }
    let means: Vec<String> = sums.iter().map(|&(s, n)| fmt_opt((n > 0).then(|| s / n as f64))).collect();
    writeln!(text, "MEAN\t-\t-\t{}", means.join("\t"))?;
    emit(a.out.as_deref(), &text)
}

pub fn scape(a: &ScapeArgs) -> Result<()> {
    let mut digest = InputDigest::default();
    let vocab = a.input.vocabulary(&mut digest)?;
    let pieces = a.input.pieces(&vocab, &mut digest)?;
    let piece = match &a.id {
        Some(id) => pieces.iter().find(|p| &p.id == id).with_context(|| format!("no piece with id {id:?}"))?,
        None if pieces.len() == 1 => &pieces[0],
        None => bail!("the input holds {} pieces; choose one with --id", pieces.len()),
    };
    let mut config = RunConfig::new("scape");
    a.input.record(&mut config);
    let settings = a.structure.settings(&mut config)?;
    config.set("piece", &piece.id).set("out", a.out.display()).set_inputs(digest.hex());

    let timeline = decode_piece(piece)?;
    let chroma = render_chroma(&timeline, settings.frame_rate).with_context(|| format!("piece {}", piece.id))?;
    let ssm = compute_ssm(&chroma, &settings.params)?;
    let stride = settings.stride.unwrap_or_else(|| default_stride(ssm.len()));
    let plot = scape_plot_with(&ssm, stride)?;

    let mut text = config.header().into_bytes();
    writeln!(
        &mut text as &mut dyn std::io::Write,
        "# rows=duration 1..{n}, columns=center 0..{m}",
        n = plot.len(),
        m = plot.len() - 1
    )?;
    write_text_matrix(&mut text, &plot)?;
    write_file(&a.out.with_extension("txt"), &text)?;
    let mut pgm = Vec::new();
    write_pgm_annotated(&mut pgm, &plot, &config.lines())?;
    write_file(&a.out.with_extension("pgm"), &pgm)?;

    println!("frames\t{}", plot.len());
    for (name, (lo, hi)) in parse_bands(&["3-8".into(), "8-15".into(), "15-".into()])? {
        println!("{name}\t{}", fmt_opt(structureness_indicator(&plot, lo, hi).ok()));
    }
    Ok(())
}

impl ModelArgs {
    fn record(&self, config: &mut RunConfig) {
        config
            .set("model", format!("{:?}", self.model).to_lowercase())
            .set("model_path", self.model_path.as_ref().map_or("-".into(), |p| p.display().to_string()))
            .set("model_command", self.model_command.as_deref().unwrap_or("-"))
            .set("ngram_order", self.order)
            .set("ngram_alpha", self.alpha)
            .set("uniform_jitter", self.jitter);
    }

    fn build(
        &self,
        input: &InputArgs,
        vocab: &Vocabulary,
        digest: &mut InputDigest,
        seed: u64,
    ) -> Result<(Box<dyn SequenceModel>, Option<Corpus>)> {
        let corpus = |digest: &mut InputDigest| -> Result<Vec<Vec<u32>>> {
            let pieces = input.pieces(vocab, digest)?;
            piece_ids(&pieces, vocab)
        };
        Ok(match self.model {
            ModelKind::Uniform if self.jitter => (Box::new(UniformModel::with_jitter(vocab.len(), seed)), None),
            ModelKind::Uniform => (Box::new(UniformModel::new(vocab.len())), None),
            ModelKind::Oracle => {
                let c = corpus(digest)?;
                (Box::new(OracleModel::new(c.clone(), vocab.len())), Some(c))
            }
            ModelKind::External => {
                let cmd = self.model_command.as_deref().context("--model external needs --model-command")?;
                let mut command = process::Command::new("sh");
                command.arg("-c").arg(cmd);
                (Box::new(ExternalModel::spawn(command, vocab.len())?), None)
            }
            ModelKind::Ngram => match &self.model_path {
                Some(path) => {
                    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
                    digest.add(&bytes);
                    let model =
                        NGramModel::load(bytes.as_slice()).with_context(|| format!("loading {}", path.display()))?;
                    ensure!(
                        model.vocab_size() == vocab.len(),
                        "model was trained on a vocabulary of {} ids, this one has {}",
                        model.vocab_size(),
                        vocab.len()
                    );
                    (Box::new(model), None)
                }
                None => {
                    let c = corpus(digest)?;
                    let model =
                        NGramModel::train(&c, vocab.len(), NGramConfig { order: self.order, alpha: self.alpha })?;
                    (Box::new(model), Some(c))
                }
            },
        })
    }
}

pub fn challenge(a: &ChallengeArgs) -> Result<()> {
    let mut digest = InputDigest::default();
    let vocab = a.input.vocabulary(&mut digest)?;
    let (model, corpus) = a.model.build(&a.input, &vocab, &mut digest, a.seed)?;
    let corpus = match corpus {
        Some(c) => c,
        None => piece_ids(&a.input.pieces(&vocab, &mut digest)?, &vocab)?,
    };
    let questions = build_questions(&corpus, vocab.bar_id(), a.questions, a.seed)?;
    let mode = match a.mode {
        Mode::Teacher => ScoringMode::TeacherForced,
        Mode::Sampled => ScoringMode::Sampled { seed: a.seed },
    };
    let report = run_challenge(&model, &questions, mode)?;

    let mut config = RunConfig::new("challenge");
    a.input.record(&mut config);
    a.model.record(&mut config);
    config
        .set("questions", a.questions)
        .set("seed", a.seed)
        .set("mode", format!("{:?}", a.mode).to_lowercase())
        .set("segment_bars", 8)
        .set("tie_break", "lowest index")
        .set_inputs(digest.hex());
    let mut text = config.header();
    writeln!(text, "# accuracy={:.6} correct={} questions={}", report.accuracy, report.correct, report.answers.len())?;
    text.push_str("question_id\tsource\tstart_bar\tP0\tP1\tP2\tP3\tchosen\ttrue\tcorrect\n");
    for (q, ans) in questions.iter().zip(&report.answers) {
        let probs: Vec<String> = ans.probabilities.iter().map(|p| format!("{p:.12}")).collect();
        writeln!(
            text,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            q.id,
            q.source,
            q.start_bar,
            probs.join("\t"),
            ans.chosen,
            ans.true_index,
            ans.correct as u8
        )?;
    }
    emit(a.out.as_deref(), &text)?;
    if a.out.is_some() {
        println!("accuracy\t{:.6}\t{}/{}", report.accuracy, report.correct, report.answers.len());
    }
    Ok(())
}

pub fn train_model(a: &TrainArgs) -> Result<()> {
    let mut digest = InputDigest::default();
    let vocab = a.input.vocabulary(&mut digest)?;
    let corpus = piece_ids(&a.input.pieces(&vocab, &mut digest)?, &vocab)?;
    let model = NGramModel::train(&corpus, vocab.len(), NGramConfig { order: a.order, alpha: a.alpha })?;
    let mut config = RunConfig::new("train-model");
    a.input.record(&mut config);
    config.set("order", a.order).set("alpha", a.alpha).set("out", a.out.display()).set_inputs(digest.hex());
    let mut bytes = Vec::new();
    model.save_with_note(&mut bytes, Some(&config.one_line()))?;
    write_file(&a.out, &bytes)?;
    println!(
        "pieces\t{}\nvocab_size\t{}\nperplexity_train\t{:.6}",
        corpus.len(),
        vocab.len(),
        model.perplexity(&corpus)?
    );
    Ok(())
}

pub fn generate(a: &GenerateArgs) -> Result<()> {
    let mut digest = InputDigest::default();
    let vocab = a.input.vocabulary(&mut digest)?;
    let (model, _) = a.model.build(&a.input, &vocab, &mut digest, a.seed)?;
    let primer: Vec<u32> = match &a.primer {
        Some(path) => {
            let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            digest.add(&bytes);
            let tokens: Vec<EventToken> =
                read_tokens(bytes.as_slice()).with_context(|| format!("parsing {}", path.display()))?;
            vocab.ids(&tokens).map_err(|t| anyhow::anyhow!("primer token {t} is not in the vocabulary"))?
        }
        None => vec![],
    };
    let mut config = RunConfig::new("generate");
    a.input.record(&mut config);
    a.model.record(&mut config);
    config
        .set("primer", a.primer.as_ref().map_or("-".into(), |p| p.display().to_string()))
        .set("count", a.count)
        .set("bars", a.bars)
        .set("temperature", a.temperature)
        .set("seed", a.seed)
        .set("max_tokens", a.max_tokens)
        .set("out", a.out.display())
        .set_inputs(digest.hex());
    ensure_dir(&a.out)?;
    for i in 0..a.count {
        let seed = a.seed.wrapping_add(i as u64);
        let gen_config =
            GenerationConfig { target_bars: a.bars, temperature: a.temperature, seed, max_tokens: a.max_tokens };
        let generation = generate_tokens(&model, &vocab, &primer, &gen_config).with_context(|| format!("piece {i}"))?;
        let tokens = vocab.tokens(&generation.ids).expect("generated ids are in the vocabulary");
        let name = format!("gen_{i:04}");
        let mut text = config.header();
        writeln!(
            text,
            "# piece={name} seed={seed} bars={} raw_tokens={} dropped={} hit_cap={}",
            generation.bars, generation.raw_len, generation.dropped, generation.hit_cap
        )?;
        text.push_str(&tokens_to_string(&tokens));
        write_file(&a.out.join(format!("{name}.tokens")), text.as_bytes())?;
        if a.midi {
            let timeline = decode_tokens(&tokens).expect("repaired streams decode");
            let note = format!("{}; piece={name}", config.one_line());
            write_file(&a.out.join(format!("{name}.mid")), &timeline_to_midi_with_text(&timeline, Some(&note)))?;
        }
    }
    Ok(())
}
