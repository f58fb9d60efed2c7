//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use lctid_core::cnn::{grad_check, ArchSpec, Layer, Model, Optimizer, Tensor2};
use lctid_core::corpus::{synth_corpus, SynthSpec};
use lctid_core::dsp::{bark, Spectrum, SpectrumAnalyzer};
use lctid_core::experiments::{
    holdout, ife, EvalReport, ExperimentConfig, PipelineScorer, RankOrder, RankingTable,
};
use lctid_core::experiments::{f1_from_pr, Balance, Dataset};
use lctid_core::features::{energy, sharpness, spectral_centroid, spectral_flux, zcr, FeatureConfig};
use lctid_core::features::{jitter, jitter_derivative, shimmer};
use lctid_core::pitch::{shs_estimate, PeriodSequence, PitchConfig};
use lctid_core::segmenter::{first_quartile, plan, split, unsplit};
use lctid_core::{CorpusManifest, Dialect, Error, FeatureId, FeatureMatrix};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(elapsed: Duration, limit: Duration) -> Outcome {
    if elapsed <= limit {
        Ok(String::new())
    } else {
        Err(format!("took {elapsed:.1?}, limit {limit:?}"))
    }
}

const SR: u32 = 16_000;
const CORPUS_SEED: u64 = 7;

// ---------------------------------------------------------------- 1

fn architecture() -> Outcome {
    let m = Model::build_named("CA02", 187, 10, 1).map_err(|e| e.to_string())?;
    let counts = m.param_counts();
    check!(
        counts == [2272, 7200, 6208, 12352, 2688000, 2050],
        "per-layer counts {counts:?}"
    );
    let mut shapes = m.shape_chain().map_err(|e| e.to_string())?;
    // Activations and dropout keep their input shape.
    shapes.dedup();
    let chain: Vec<usize> = shapes.iter().map(|&(rows, cols)| if rows == 1 { cols } else { rows }).collect();
    check!(
        chain == [187, 181, 175, 87, 85, 83, 41, 2624, 1024, 2],
        "shape chain {chain:?} from {shapes:?}"
    );
    Ok(format!("counts {counts:?}, chain {chain:?}"))
}

// ---------------------------------------------------------------- 2

fn gradients() -> Outcome {
    let spec = ArchSpec {
        name: "MINI".into(),
        kernels: [3, 3, 2, 2],
        conv_channels: [3, 3, 4, 4],
        dense: vec![6, 5],
        conv_dropout: 0.25,
        dense_dropout: 0.5,
        optimizer: Optimizer::Sgd,
    };
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let mut m = Model::build(&spec, 16, 2, seed).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        // Zero biases can leave a small net with every ReLU input at exactly
        // 0, where central differences see half a one-sided slope.
        for l in m.layers.iter_mut() {
            if let Layer::Conv1d { bias, .. } | Layer::Dense { bias, .. } = l {
                bias.iter_mut().for_each(|b| *b = rng.random_range(0.05..0.25));
            }
        }
        let mut kinds: Vec<&str> = m.layers.iter().map(|l| l.kind()).collect();
        kinds.sort();
        kinds.dedup();
        check!(kinds.len() == 7, "model covers only {kinds:?}");
        let x = Tensor2::new(16, 2, (0..32).map(|_| rng.random_range(-1.0..1.0)).collect()).map_err(|e| e.to_string())?;
        let target = if seed % 2 == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
        let err = grad_check(&m, &x, target, 1e-5, seed).map_err(|e| e.to_string())?;
        worst = worst.max(err);
    }
    check!(worst < 1e-4, "max relative error {worst:.3e}");
    Ok(format!("max relative error {worst:.2e} over 10 models"))
}

// ---------------------------------------------------------------- 3

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Magnitudes of bins 1..=K/2 of the Hamming-windowed, zero-padded frame by
/// direct summation.
fn dft_magnitudes(frame: &[f64], k: usize) -> Vec<f64> {
    let n = frame.len();
    let w: Vec<f64> = (0..n)
        .map(|i| frame[i] * (0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos()))
        .collect();
    (1..=k / 2)
        .map(|b| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &x) in w.iter().enumerate() {
                let ph = 2.0 * PI * ((b * i) % k) as f64 / k as f64;
                re += x * ph.cos();
                im -= x * ph.sin();
            }
            re.hypot(im)
        })
        .collect()
}

fn oracle_centroid(mags: &[f64], bin_hz: f64, map: impl Fn(f64) -> f64) -> f64 {
    let num: f64 = mags.iter().enumerate().map(|(j, m)| map((j + 1) as f64 * bin_hz) * m).sum();
    let den: f64 = mags.iter().sum();
    num / den
}

fn oracle_bark(f: f64) -> f64 {
    let z = 26.81 * f / (1960.0 + f) - 0.53;
    if z < 0.0 {
        0.0
    } else {
        z
    }
}

fn oracle_zcr(x: &[f64], sr: u32) -> f64 {
    let sign = |v: f64| -> i32 {
        if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    };
    let mut count = 0;
    for n in 1..x.len() {
        let (a, b) = (sign(x[n - 1]), sign(x[n]));
        if b == 0 {
            if n + 1 < x.len() && sign(x[n - 1]) * sign(x[n + 1]) == -1 {
                count += 1;
            }
        } else if a * b == -1 {
            count += 1;
        }
    }
    count as f64 / (x.len() as f64 / sr as f64)
}

fn features_vs_oracles() -> Outcome {
    let (n, k) = (320, 512);
    let an = SpectrumAnalyzer::new(n, k, SR).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = [0.0f64; 5];
    let mut prev: Option<(Spectrum, Vec<f64>)> = None;
    for i in 0..1000 {
        // Mix smooth noise, coarse integer values (exact zeros) and tones.
        let frame: Vec<f64> = match i % 3 {
            0 => (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            1 => (0..n).map(|_| rng.random_range(-2i32..=2) as f64).collect(),
            _ => {
                let f = rng.random_range(50.0..7000.0);
                let ph = rng.random_range(0.0..2.0 * PI);
                (0..n)
                    .map(|t| (2.0 * PI * f * t as f64 / SR as f64 + ph).sin() + 0.01 * rng.random_range(-1.0..1.0))
                    .collect()
            }
        };
        let e_oracle = frame.iter().fold(0.0, |acc, x| acc + x.powi(2));
        worst[0] = worst[0].max(rel(energy(&frame), e_oracle));
        worst[4] = worst[4].max(rel(zcr(&frame, SR), oracle_zcr(&frame, SR)));

        let spec = an.magnitude(&frame);
        let mags = dft_magnitudes(&frame, k);
        let bin_hz = SR as f64 / k as f64;
        worst[1] = worst[1].max(rel(spectral_centroid(&spec), oracle_centroid(&mags, bin_hz, |f| f)));
        worst[2] = worst[2].max(rel(sharpness(&spec), oracle_centroid(&mags, bin_hz, oracle_bark)));
        if let Some((ps, pm)) = &prev {
            let l2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let (a, b) = (l2(&mags), l2(pm));
            let flux: f64 = mags.iter().zip(pm).map(|(x, y)| (x / a - y / b).powi(2)).sum();
            worst[3] = worst[3].max(rel(spectral_flux(&spec, ps), flux));
        }
        prev = Some((spec, mags));
    }
    let names = ["energy", "centroid", "sharpness", "flux", "zcr"];
    for (name, w) in names.iter().zip(worst) {
        check!(w <= 1e-9, "{name}: worst relative error {w:.3e}");
    }
    check!(bark(1000.0) == oracle_bark(1000.0), "bark(1000)");

    // Period sequences with hand-computed answers.
    let seq = |p: &[f64], a: &[f64]| PeriodSequence {
        periods_s: p.to_vec(),
        peak_amps: a.to_vec(),
    };
    let flat = [1.0; 4];
    let hand: [(&str, f64, f64); 7] = [
        ("jitter [10,10,12,12]", jitter(&seq(&[10.0, 10.0, 12.0, 12.0], &flat)).unwrap(), 2.0 / 3.0 / 11.0),
        ("jitter constant", jitter(&seq(&[7.0; 5], &[1.0; 5])).unwrap(), 0.0),
        ("jitter [20,20,24,24]", jitter(&seq(&[20.0, 20.0, 24.0, 24.0], &flat)).unwrap(), 4.0 / 3.0 / 22.0),
        ("djitter [10,10,12,12]", jitter_derivative(&seq(&[10.0, 10.0, 12.0, 12.0], &flat)).unwrap(), 4.0 / 2.0 / 11.0),
        ("djitter [10,11,12,13]", jitter_derivative(&seq(&[10.0, 11.0, 12.0, 13.0], &flat)).unwrap(), 0.0),
        ("shimmer [5,5,4,4]", shimmer(&seq(&[1.0; 4], &[5.0, 5.0, 4.0, 4.0])).unwrap(), 1.0 / 3.0 / 4.5),
        ("shimmer constant", shimmer(&seq(&[1.0; 4], &[0.3; 4])).unwrap(), 0.0),
    ];
    for (name, got, want) in hand {
        check!(got == want, "{name}: {got} != {want}");
    }
    let s = shimmer(&seq(&[1.0; 4], &[1.0, 1.0, 0.8, 0.8])).unwrap();
    check!((s - 0.0741).abs() < 5e-5, "shimmer [1,1,.8,.8] = {s}");
    let j = jitter(&seq(&[0.010, 0.010, 0.012, 0.012], &flat)).unwrap();
    check!((j - 0.0606).abs() < 1e-4, "jitter in seconds = {j}");
    let too_few = jitter(&seq(&[1.0, 1.0], &[1.0, 1.0])).is_err() && jitter_derivative(&seq(&[1.0; 3], &[1.0; 3])).is_err();
    check!(too_few, "short period sequences must be rejected");
    Ok(format!(
        "worst rel err energy {:.1e} centroid {:.1e} sharpness {:.1e} flux {:.1e} zcr {:.1e}; 7 period identities exact",
        worst[0], worst[1], worst[2], worst[3], worst[4]
    ))
}

// ---------------------------------------------------------------- 4

fn tone(f0: f64, harmonics: &[usize], n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = i as f64 / SR as f64;
            0.2 * harmonics
                .iter()
                .map(|&h| (2.0 * PI * h as f64 * f0 * t + 0.7 * h as f64).sin() / h as f64)
                .sum::<f64>()
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn pitch_accuracy() -> Outcome {
    let n = 960;
    let an = SpectrumAnalyzer::new(n, 1024, SR).map_err(|e| e.to_string())?;
    let cfg = PitchConfig::default();
    let (mut full, mut missing) = (Vec::new(), Vec::new());
    let mut f0 = 80.0;
    while f0 <= 400.0 + 1e-9 {
        let est = |h: &[usize]| shs_estimate(&an.magnitude(&tone(f0, h, n)), &cfg).f0_hz;
        full.push((est(&[1, 2, 3, 4, 5, 6]) - f0).abs());
        missing.push((est(&[2, 3, 4, 5, 6]) - f0).abs());
        f0 += 5.0;
    }
    let count = full.len();
    let (mf, mm) = (median(full.clone()), median(missing.clone()));
    let all = median(full.into_iter().chain(missing).collect());
    check!(all <= 2.0 && mf <= 2.0 && mm <= 2.0, "median |error|: all {all:.3} full {mf:.3} missing-fundamental {mm:.3} Hz");
    Ok(format!(
        "median |error| {all:.3} Hz over {} tones (with fundamental {mf:.3}, without {mm:.3})",
        2 * count
    ))
}

// ---------------------------------------------------------------- 5

fn segmentation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for _ in 0..1000 {
        let u = rng.random_range(1..2000usize);
        let s = rng.random_range(1..400usize);
        let p = plan(u, s).map_err(|e| e.to_string())?;
        // Durations in units of the 10 ms hop are exact integers.
        let ceil = u.div_ceil(s);
        let d_l = u - (ceil - 1) * s;
        check!(p.n_segments == ceil, "u={u} s={s}: {} segments, want {ceil}", p.n_segments);
        check!(p.last_len == d_l && p.pad_frames == s - d_l, "u={u} s={s}: plan {p:?}");

        let ch = rng.random_range(1..4usize);
        let values: Vec<Vec<f64>> = (0..ch).map(|_| (0..u).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
        let ids = &FeatureId::HANDCRAFTED[..ch];
        let m = FeatureMatrix::new(values, ids.to_vec(), 10.0, "u").map_err(|e| e.to_string())?;
        let segs = split(&m, s, Some(Dialect::Lt)).map_err(|e| e.to_string())?;
        check!(segs.iter().all(|g| g.matrix.num_frames() == s), "segment length");
        let last = segs.last().unwrap();
        let tail_zero = last.matrix.rows().iter().all(|r| r[d_l..].iter().all(|&v| v.to_bits() == 0));
        check!(last.pad_frames == s - d_l && tail_zero, "padding is not zeros");
        let back = unsplit(&segs).map_err(|e| e.to_string())?;
        let exact = back.num_frames() == u
            && back.rows().iter().zip(m.rows()).all(|(a, b)| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        check!(exact, "round trip not bit-exact for u={u} s={s}");
    }
    let q = first_quartile(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).map_err(|e| e.to_string())?;
    check!(q == 2.0, "first_quartile([1..7]) = {q}");
    Ok("1000 random plans and round trips exact; first_quartile([1..7]) = 2".into())
}

// ---------------------------------------------------------------- shared corpus

struct Shared {
    _dir: tempfile::TempDir,
    manifest: CorpusManifest,
    data: Dataset,
}

fn shared() -> Result<&'static Shared, String> {
    static CELL: OnceLock<Result<Shared, String>> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let manifest = synth_corpus(&SynthSpec::default(), dir.path(), CORPUS_SEED).map_err(|e| e.to_string())?;
        let data = Dataset::extract(&manifest, &FeatureId::HANDCRAFTED, &FeatureConfig::default()).map_err(|e| e.to_string())?;
        Ok(Shared {
            _dir: dir,
            manifest,
            data,
        })
    })
    .as_ref()
    .map_err(Clone::clone)
}

// ---------------------------------------------------------------- 6

fn end_to_end() -> Outcome {
    let s = shared()?;
    check!(s.manifest.len() == 200, "corpus has {} utterances", s.manifest.len());
    let cfg = ExperimentConfig {
        arch: "CA03".into(),
        balance: Balance::Equalize,
        seed: 1,
        ..ExperimentConfig::default()
    };
    let (_, result) = holdout(&s.data, &FeatureId::HANDCRAFTED, &cfg).map_err(|e| e.to_string())?;
    let r = &result.folds[0];
    let (lt, ct) = (r.class(Dialect::Lt).f1, r.class(Dialect::Ct).f1);
    check!(lt >= 0.95 && ct >= 0.95, "F1 LT {lt:.4} CT {ct:.4} on {} held-out utterances", r.total);
    Ok(format!("held-out F1 LT {lt:.4} CT {ct:.4}, accuracy {:.4} on {} utterances", r.accuracy, r.total))
}

// ---------------------------------------------------------------- 7

const IFE_REPS: u64 = 20;

/// The shared corpus with SFLUX kept and the ZCR channel replaced by
/// standard normal noise drawn from `seed`.
fn with_noise_channel(data: &Dataset, seed: u64) -> Result<Dataset, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let matrices = data
        .matrices
        .iter()
        .map(|m| {
            let flux = m.channel(FeatureId::Sflux).unwrap().to_vec();
            let noise: Vec<f64> = (0..flux.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
            FeatureMatrix::new(vec![flux, noise], vec![FeatureId::Sflux, FeatureId::Zcr], m.hop_ms, m.source_id.clone())
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Dataset::new(data.records.clone(), matrices).map_err(|e| e.to_string())
}

fn ablation() -> Outcome {
    let s = shared()?;
    let mut wins = 0;
    let mut margins = Vec::new();
    let mut diverged = 0;
    for rep in 0..IFE_REPS {
        let data = with_noise_channel(&s.data, 1000 + rep)?;
        let scorer = PipelineScorer {
            data: &data,
            cfg: ife_config(rep),
        };
        // A diverged run counts as a repetition the informative channel lost.
        let t = match ife(&[FeatureId::Sflux, FeatureId::Zcr], &scorer) {
            Ok(t) => t,
            Err(Error::Diverged(_)) => {
                diverged += 1;
                continue;
            }
            Err(e) => return Err(e.to_string()),
        };
        let acc = |f| t.rows.iter().find(|r| r.feature == f).unwrap().accuracy;
        margins.push(acc(FeatureId::Sflux) - acc(FeatureId::Zcr));
        if t.rank_of(FeatureId::Sflux) == Some(1) && t.rank_of(FeatureId::Zcr) == Some(2) {
            wins += 1;
        }
    }
    check!(
        wins >= 19,
        "informative channel ranked first in {wins}/{IFE_REPS} ({diverged} diverged); margins {margins:?}"
    );

    // Shared ranks on one round of elimination accuracies.
    use FeatureId::*;
    let rfe_map = [
        (F0, 0.9907),
        (Vprob, 0.9913),
        (Energy, 0.9908),
        (Zcr, 0.9916),
        (Hnr, 0.9901),
        (Djitter, 0.9896),
        (Jitter, 0.9909),
        (Shimmer, 0.9908),
        (Sflux, 0.9906),
        (Sharp, 0.9916),
    ];
    let t = RankingTable::from_accuracies(&rfe_map, RankOrder::Ablation);
    let ranks: Vec<usize> = rfe_map.iter().map(|(f, _)| t.rank_of(*f).unwrap()).collect();
    check!(ranks == [4, 8, 5, 9, 2, 1, 7, 5, 3, 9], "elimination ranks {ranks:?}");
    let g = t.gap_stats().unwrap();
    check!(
        (g.min - 0.0001).abs() < 1e-9 && (g.max - 0.0005).abs() < 1e-9 && (g.mean - 0.0003).abs() < 5e-5,
        "elimination gaps {g:?}"
    );
    let ife_map = [
        (F0, 0.9906),
        (Vprob, 0.9888),
        (Energy, 0.9922),
        (Zcr, 0.9582),
        (Hnr, 0.9916),
        (Djitter, 0.9837),
        (Jitter, 0.9777),
        (Shimmer, 0.9801),
        (Sflux, 0.9825),
        (Sharp, 0.9310),
    ];
    let t = RankingTable::from_accuracies(&ife_map, RankOrder::Individual);
    let ranks: Vec<usize> = ife_map.iter().map(|(f, _)| t.rank_of(*f).unwrap()).collect();
    check!(ranks == [3, 4, 1, 9, 2, 5, 8, 7, 6, 10], "individual ranks {ranks:?}");
    let g = t.gap_stats().unwrap();
    check!(
        (g.min - 0.0006).abs() < 1e-9 && (g.max - 0.0272).abs() < 1e-9 && (g.mean - 0.0068).abs() < 5e-5,
        "individual gaps {g:?}"
    );
    margins.sort_by(f64::total_cmp);
    Ok(format!(
        "informative channel first in {wins}/{IFE_REPS}, {diverged} diverged (accuracy margin min {:.3}, median {:.3}); shared-rank pattern and gap stats reproduced",
        margins[0],
        margins[margins.len() / 2]
    ))
}

/// CA03 with its own optimizer, on short schedules so twenty repetitions fit
/// the time budget.
fn ife_config(rep: u64) -> ExperimentConfig {
    ExperimentConfig {
        arch: "CA03".into(),
        folds: 2,
        epochs: 5,
        patience: 2,
        seed: rep,
        ..ExperimentConfig::default()
    }
}

// ---------------------------------------------------------------- 8

/// True when `x` is the f64 nearest to `q` (ties either way).
fn nearest(x: f64, q: &BigRational) -> bool {
    let r = |v: f64| BigRational::from_float(v).unwrap();
    let two = BigRational::from_integer(2.into());
    let lo = (r(x.next_down()) + r(x)) / &two;
    let hi = (r(x) + r(x.next_up())) / &two;
    &lo <= q && q <= &hi
}

fn ratio(n: usize, d: usize) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for trial in 0..100 {
        let mut c = [[0usize; 2]; 2];
        for row in c.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.random_range(1..500);
            }
        }
        let rep = EvalReport::from_confusion(c).map_err(|e| e.to_string())?;
        let total: usize = c.iter().flatten().sum();
        check!(rep.total == total, "trial {trial}: total");
        check!(nearest(rep.accuracy, &ratio(c[0][0] + c[1][1], total)), "trial {trial}: accuracy");
        for (k, d) in [Dialect::Lt, Dialect::Ct].into_iter().enumerate() {
            let o = 1 - k;
            let (tp, fp, fn_) = (c[k][k], c[o][k], c[k][o]);
            let m = rep.class(d);
            check!(m.tp == tp && m.fp == fp && m.fn_ == fn_ && m.tn == c[o][o], "trial {trial}: counts");
            let p = ratio(tp, tp + fp);
            let r = ratio(tp, tp + fn_);
            let f1 = BigRational::from_integer(2.into()) * &p * &r / (&p + &r);
            check!(nearest(m.precision, &p), "trial {trial}: precision {d:?}");
            check!(nearest(m.recall, &r), "trial {trial}: recall {d:?}");
            check!(nearest(m.f1, &f1), "trial {trial}: F1 {d:?} = {}", m.f1);
        }
    }
    let f1 = f1_from_pr(0.9824, 0.9815);
    check!((f1 - 0.9819).abs() <= 5e-4, "F1 from printed P/R = {f1}");
    Ok(format!("100 confusions exact; F1(0.9824, 0.9815) = {f1:.5}"))
}

// ---------------------------------------------------------------- 9

fn pipeline_run(dir: &Path) -> Result<(Vec<u8>, String), String> {
    let spec = SynthSpec {
        n_utterances: 40,
        ..SynthSpec::default()
    };
    let manifest = synth_corpus(&spec, &dir.join("corpus"), 11).map_err(|e| e.to_string())?;
    let data = Dataset::extract(&manifest, &FeatureId::HANDCRAFTED, &FeatureConfig::default()).map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig {
        epochs: 4,
        seed: 3,
        ..ExperimentConfig::default()
    };
    let (trained, result) = holdout(&data, &FeatureId::HANDCRAFTED, &cfg).map_err(|e| e.to_string())?;
    let path = dir.join("model.lct");
    lctid_core::cnn::save_model(&trained.model, &path).map_err(|e| e.to_string())?;
    let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
    Ok((bytes, result.to_json().map_err(|e| e.to_string())?))
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ma, ja) = pipeline_run(a.path())?;
    let (mb, jb) = pipeline_run(b.path())?;
    check!(ma == mb, "model files differ");
    check!(ja == jb, "results JSON differs");
    Ok(format!("model files ({} bytes) and results JSON identical", ma.len()))
}

// ----------------------------------------------------------------

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 9] = [
        ("architecture fidelity", architecture, Duration::from_secs(1)),
        ("gradient correctness", gradients, Duration::from_secs(30)),
        ("feature oracles", features_vs_oracles, Duration::from_secs(60)),
        ("pitch accuracy", pitch_accuracy, Duration::from_secs(60)),
        ("segmentation law", segmentation, Duration::from_secs(10)),
        ("end-to-end synthetic classification", end_to_end, Duration::from_secs(600)),
        ("ablation sanity", ablation, Duration::from_secs(900)),
        ("metric identities", metrics, Duration::from_secs(60)),
        ("determinism", determinism, Duration::from_secs(600)),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.into_iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let out = run().and_then(|detail| within(t.elapsed(), limit).map(|_| detail));
        let elapsed = t.elapsed();
        match out {
            Ok(detail) => println!("criterion {n} PASS {name} [{elapsed:.1?}]: {detail}"),
            Err(e) => {
                failed += 1;
                println!("criterion {n} FAIL {name} [{elapsed:.1?}]: {e}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
