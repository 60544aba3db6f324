//! Subcommands. Data goes to files, progress to standard error.

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use respdyn_core::blending::blend_interpolate;
use respdyn_core::edr::{build_edr, detect_peaks, exclude_pvc, remove_baseline, EcgRecord, Polarity};
use respdyn_core::features::{estimate_shape, extract_ridge, nrr_series};
use respdyn_core::simgen::{tone, two_component};
use respdyn_core::sst::{Anchor, SstEngine, TfMap};
use respdyn_core::stats::{effect_site, spearman, PairCounts};
use respdyn_core::vmwav::{analytic_vm, interior_vm, spectrum_and_slr};

use crate::config::{fmt_f64, PipelineConfig, SimKind};
use crate::table::{read_raw, Table, TableWriter};

macro_rules! progress {
    ($cmd:expr, $($arg:tt)*) => { eprintln!("respdyn {}: {}", $cmd, format!($($arg)*)) };
}

/// Relative tolerance on the spacing of a uniform time column.
const SPACING_TOL: f64 = 1e-6;

/// Start and spacing of a uniform time column.
fn uniform_spacing(t: &Table, times: &[f64], column: &str) -> Result<(f64, f64)> {
    if times.len() < 2 {
        bail!(t.invalid(0, column, "need at least two samples"));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        bail!(t.invalid(1, column, "times must increase"));
    }
    for (r, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > SPACING_TOL * dt {
            bail!(t.invalid(r + 1, column, &format!("spacing {} differs from the mean spacing {}", w[1] - w[0], dt)));
        }
    }
    Ok((times[0], dt))
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AnchorArg {
    Start,
    Centre,
}

impl From<AnchorArg> for Anchor {
    fn from(a: AnchorArg) -> Self {
        match a {
            AnchorArg::Start => Anchor::Start,
            AnchorArg::Centre => Anchor::Centre,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolarityArg {
    R,
    S,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    TwoComponent,
    Tone,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WaveletKind {
    Interior,
    Analytic,
}

/// SST knobs shared by `sst`.
#[derive(Debug, Args)]
pub struct SstFlags {
    /// Sample spacing in seconds
    #[arg(long)]
    pub dt: Option<f64>,
    /// Lag L in seconds; must exceed (m+n) dt/2
    #[arg(long)]
    pub lag: Option<f64>,
    /// Spline order of the wavelet
    #[arg(long)]
    pub m: Option<usize>,
    /// Vanishing-moment order of the wavelet
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of frequency bins
    #[arg(long)]
    pub bins: Option<usize>,
    /// Placement of each analysis row within the window
    #[arg(long, value_enum)]
    pub anchor: Option<AnchorArg>,
    /// Exponent of the scale in the squeeze weight
    #[arg(long, allow_hyphen_values = true)]
    pub scale_exponent: Option<f64>,
}

impl SstFlags {
    fn apply(&self, cfg: &mut PipelineConfig) {
        set(&mut cfg.dt, self.dt);
        set(&mut cfg.lag, self.lag);
        set(&mut cfg.m, self.m);
        set(&mut cfg.n, self.n);
        set(&mut cfg.bins, self.bins);
        set(&mut cfg.anchor, self.anchor.map(Anchor::from));
        set(&mut cfg.scale_exponent, self.scale_exponent);
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// Irregular samples to a blending spline.
#[derive(Debug, Args)]
pub struct InterpArgs {
    /// CSV with columns time,value (`-` for stdin)
    #[arg(long)]
    pub input: String,
    /// Dense resampled series (time,value)
    #[arg(long)]
    pub out: String,
    /// Spline coefficients and knots (role,index,value)
    #[arg(long)]
    pub curve_out: Option<String>,
    /// Spline order
    #[arg(long)]
    pub order: Option<usize>,
    /// Resampling rate in Hz (defaults to eta)
    #[arg(long)]
    pub rate: Option<f64>,
}

pub fn interp(a: &InterpArgs, mut cfg: PipelineConfig) -> Result<()> {
    set(&mut cfg.order, a.order);
    cfg.validate().context("stage config")?;
    let t = Table::read(&a.input).context("stage read input")?;
    let times = t.finite("time").context("stage read input")?;
    let values = t.finite("value").context("stage read input")?;
    let curve = blend_interpolate(&times, &values, cfg.order).context("stage blending")?;
    let rate = a.rate.unwrap_or(cfg.eta);
    if !(rate > 0.0) {
        bail!("stage resample: rate must be positive");
    }
    let (lo, hi) = (times[0], times[times.len() - 1]);
    let count = ((hi - lo) * rate).floor() as usize + 1;
    progress!("interp", "{} samples, order {}, {} output points at {} Hz", times.len(), cfg.order, count, rate);
    let mut w = TableWriter::create(&a.out, &["time", "value"]).context("stage write output")?;
    for k in 0..count {
        let x = (lo + k as f64 / rate).min(hi);
        w.row(&[x, curve.eval(x)]).context("stage write output")?;
    }
    w.finish().context("stage write output")?;
    if let Some(path) = &a.curve_out {
        let mut w = TableWriter::create(path, &["role", "index", "value"]).context("stage write curve")?;
        w.record(["order".to_string(), "0".to_string(), curve.order().to_string()])?;
        for (i, k) in curve.knots().knots().iter().enumerate() {
            w.record(["knot".to_string(), i.to_string(), fmt_f64(*k)])?;
        }
        for (i, c) in curve.coeffs().iter().enumerate() {
            w.record(["coef".to_string(), i.to_string(), fmt_f64(*c)])?;
        }
        w.finish().context("stage write curve")?;
    }
    Ok(())
}

/// Samples of the VM wavelet and its spectrum.
#[derive(Debug, Args)]
pub struct WaveletArgs {
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value = "interior")]
    pub kind: WaveletKind,
    /// Sample spacing in x
    #[arg(long, default_value_t = 1.0 / 64.0)]
    pub step: f64,
    /// Wavelet samples: x,psi (interior) or x,re,im (analytic)
    #[arg(long)]
    pub out: String,
    /// Magnitude spectrum (omega,magnitude)
    #[arg(long)]
    pub spectrum_out: Option<String>,
    /// Spectrum points per pi/h
    #[arg(long, default_value_t = 64)]
    pub density: usize,
}

pub fn wavelet(a: &WaveletArgs, mut cfg: PipelineConfig) -> Result<()> {
    set(&mut cfg.m, a.m);
    set(&mut cfg.n, a.n);
    if !(a.step > 0.0) {
        bail!("stage config: step must be positive");
    }
    let w = interior_vm::<f64>(cfg.m, cfg.n).context("stage wavelet")?;
    let (lo, hi) = w.support();
    let count = ((hi - lo) / a.step).round() as usize + 1;
    match a.kind {
        WaveletKind::Interior => {
            let mut out = TableWriter::create(&a.out, &["x", "psi"]).context("stage write output")?;
            for k in 0..count {
                let x = (lo + k as f64 * a.step).min(hi);
                out.row(&[x, w.eval(x)])?;
            }
            out.finish()?;
        }
        WaveletKind::Analytic => {
            // the Hilbert part is not compactly supported; sample one support width either side
            let width = hi - lo;
            let grid: Vec<f64> = (0..3 * (count - 1) + 1).map(|k| lo - width + k as f64 * a.step).collect();
            let s = analytic_vm(cfg.m, cfg.n, &grid).context("stage analytic wavelet")?;
            let mut out = TableWriter::create(&a.out, &["x", "re", "im"]).context("stage write output")?;
            for (x, v) in s.grid.iter().zip(&s.values) {
                out.row(&[*x, v.re, v.im])?;
            }
            out.finish()?;
        }
    }
    let report = spectrum_and_slr(&w, a.density).context("stage spectrum")?;
    if let Some(path) = &a.spectrum_out {
        let mut out = TableWriter::create(path, &["omega", "magnitude"]).context("stage write spectrum")?;
        for (o, v) in report.omega.iter().zip(&report.magnitude) {
            out.row(&[*o, *v])?;
        }
        out.finish()?;
    }
    progress!("wavelet", "psi_{{{};{}}} on [{lo}, {hi}]", cfg.m, cfg.n);
    println!("m={}", cfg.m);
    println!("n={}", cfg.n);
    println!("slr_db={}", fmt_f64(report.slr_db));
    Ok(())
}

/// Streaming synchrosqueezed transform.
#[derive(Debug, Args)]
pub struct SstArgs {
    /// CSV with columns time,value, uniformly spaced at dt (`-` for stdin)
    #[arg(long)]
    pub input: String,
    /// Treat the input as one number per line, sampled at dt from --start
    #[arg(long)]
    pub raw: bool,
    /// Time of the first raw sample
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub start: f64,
    /// Long-format tvPS (frame_time,freq,power)
    #[arg(long)]
    pub out: String,
    /// Per-frame top bin (frame_time,freq,power)
    #[arg(long)]
    pub summary_out: Option<String>,
    #[command(flatten)]
    pub sst: SstFlags,
}

pub fn sst(a: &SstArgs, mut cfg: PipelineConfig) -> Result<()> {
    a.sst.apply(&mut cfg);
    cfg.validate().context("stage config")?;
    let (start, values) = if a.raw {
        (a.start, read_raw(&a.input).context("stage read input")?)
    } else {
        let t = Table::read(&a.input).context("stage read input")?;
        let times = t.finite("time").context("stage read input")?;
        let values = t.finite("value").context("stage read input")?;
        let (start, dt) = uniform_spacing(&t, &times, "time").context("stage read input")?;
        if (dt - cfg.dt).abs() > SPACING_TOL * cfg.dt {
            bail!("stage read input: sample spacing {dt} does not match dt={}; set --dt", cfg.dt);
        }
        (start, values)
    };
    let sc = cfg.sst()?;
    let freqs = sc.frequencies();
    let mut engine = SstEngine::new(sc.clone(), start).context("stage sst")?;
    let mut out = TableWriter::create(&a.out, &["frame_time", "freq", "power"]).context("stage write output")?;
    let mut summary = match &a.summary_out {
        Some(p) => Some(TableWriter::create(p, &["frame_time", "freq", "power"]).context("stage write summary")?),
        None => None,
    };
    let mut frames = 0usize;
    for x in &values {
        let Some(frame) = engine.push(*x).context("stage sst")? else { continue };
        frames += 1;
        for (f, p) in freqs.iter().zip(&frame.v) {
            out.row(&[frame.time, *f, *p]).context("stage write output")?;
        }
        if let Some(s) = summary.as_mut() {
            let k = (0..frame.v.len()).fold(0, |b, k| if frame.v[k] > frame.v[b] { k } else { b });
            s.row(&[frame.time, freqs[k], frame.v[k]]).context("stage write summary")?;
        }
    }
    out.finish()?;
    if let Some(s) = summary {
        s.finish()?;
    }
    progress!("sst", "{} samples at dt={}, {} frames x {} bins ({} to {} Hz)", values.len(), sc.dt, frames, sc.bins, sc.freq_lo(), sc.freq_hi());
    if frames == 0 {
        progress!("sst", "warning: input shorter than the analysis window ({} samples)", sc.window());
    }
    Ok(())
}

/// Reads the long-format tvPS written by `sst`.
pub fn read_tfmap(path: &str) -> Result<TfMap<f64>> {
    let t = Table::read(path)?;
    let ft = t.column("frame_time")?;
    let fr = t.column("freq")?;
    let pw = t.column("power")?;
    if ft.is_empty() {
        bail!("{path}: no data rows");
    }
    let mut times: Vec<f64> = Vec::new();
    let mut freqs: Vec<f64> = Vec::new();
    let mut v: Vec<Vec<f64>> = Vec::new();
    for r in 0..ft.len() {
        if times.last() != Some(&ft[r]) {
            if let Some(prev) = v.last() {
                if prev.len() != freqs.len() {
                    bail!(t.invalid(r, "frame_time", &format!("previous frame has {} bins, expected {}", prev.len(), freqs.len())));
                }
            }
            times.push(ft[r]);
            v.push(Vec::new());
        }
        let row = v.last_mut().expect("frame started");
        let j = row.len();
        if times.len() == 1 {
            freqs.push(fr[r]);
        } else if j >= freqs.len() || freqs[j] != fr[r] {
            bail!(t.invalid(r, "freq", "frequency grid differs from the first frame"));
        }
        if !(pw[r] >= 0.0) || !pw[r].is_finite() {
            bail!(t.invalid(r, "power", "power must be finite and nonnegative"));
        }
        row.push(pw[r]);
    }
    if v.last().expect("nonempty").len() != freqs.len() {
        bail!(t.invalid(ft.len() - 1, "frame_time", "last frame is incomplete"));
    }
    Ok(TfMap::from_power(times, freqs, v))
}

/// Ridge and NRR from a tvPS.
#[derive(Debug, Args)]
pub struct NrrArgs {
    /// Long-format tvPS (frame_time,freq,power)
    #[arg(long)]
    pub input: String,
    /// NRR per frame (frame_time,P_r,P_nr,NRR); NRR is empty when undefined
    #[arg(long)]
    pub out: Option<String>,
    /// Ridge per frame (frame_time,freq)
    #[arg(long)]
    pub ridge_out: Option<String>,
    /// Ridge jump penalty
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Half-width of the rhythmic band in Hz
    #[arg(long)]
    pub band_hz: Option<f64>,
    /// Nonrhythmic power counts bins at or above this frequency
    #[arg(long)]
    pub floor_hz: Option<f64>,
    /// Rhythmic bands around h times the ridge frequency, h = 1..=harmonics
    #[arg(long)]
    pub harmonics: Option<usize>,
}

pub fn nrr(a: &NrrArgs, mut cfg: PipelineConfig) -> Result<()> {
    set(&mut cfg.lambda, a.lambda);
    set(&mut cfg.band_hz, a.band_hz);
    set(&mut cfg.floor_hz, a.floor_hz);
    set(&mut cfg.harmonics, a.harmonics);
    cfg.validate().context("stage config")?;
    if a.out.is_none() && a.ridge_out.is_none() {
        bail!("stage config: nothing to write; pass --out and/or --ridge-out");
    }
    let map = read_tfmap(&a.input).context("stage read tfmap")?;
    let ridge = extract_ridge(&map.v, cfg.lambda).context("stage ridge")?;
    let rf = ridge.frequencies(&map);
    if let Some(path) = &a.ridge_out {
        let mut w = TableWriter::create(path, &["frame_time", "freq"]).context("stage write ridge")?;
        for (t, f) in map.times.iter().zip(&rf) {
            w.row(&[*t, *f])?;
        }
        w.finish()?;
    }
    let s = nrr_series(&map, &ridge, &cfg.split()).context("stage nrr")?;
    if let Some(path) = &a.out {
        let mut w = TableWriter::create(path, &["frame_time", "P_r", "P_nr", "NRR"]).context("stage write nrr")?;
        for i in 0..s.times.len() {
            let nrr = s.nrr[i].map(fmt_f64).unwrap_or_default();
            w.record([fmt_f64(s.times[i]), fmt_f64(s.p_r[i]), fmt_f64(s.p_nr[i]), nrr])?;
        }
        w.finish()?;
    }
    let mean = s.mean().map_or_else(|| "undefined".to_string(), fmt_f64);
    progress!("nrr", "{} frames x {} bins, mean finite NRR {mean}", map.frames(), map.bins());
    Ok(())
}

/// Fourier-series wave shape regression.
#[derive(Debug, Args)]
pub struct ShapeArgs {
    /// CSV with columns y,amp,phase (phase in cycles)
    #[arg(long)]
    pub input: String,
    /// Number of harmonics D
    #[arg(long)]
    pub harmonics: Option<usize>,
    /// Coefficients (harmonic,alpha,beta)
    #[arg(long)]
    pub out: String,
    /// Shape samples (u,value) over one period
    #[arg(long)]
    pub curve_out: Option<String>,
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
}

pub fn shape(a: &ShapeArgs, mut cfg: PipelineConfig) -> Result<()> {
    set(&mut cfg.shape_harmonics, a.harmonics);
    cfg.validate().context("stage config")?;
    let t = Table::read(&a.input).context("stage read input")?;
    let y = t.finite("y").context("stage read input")?;
    let amp = t.finite("amp").context("stage read input")?;
    let phase = t.finite("phase").context("stage read input")?;
    let model = estimate_shape(&y, &amp, &phase, cfg.shape_harmonics).context("stage shape")?;
    let mut w = TableWriter::create(&a.out, &["harmonic", "alpha", "beta"]).context("stage write output")?;
    for (l, (al, be)) in model.alpha.iter().zip(&model.beta).enumerate() {
        w.row(&[(l + 1) as f64, *al, *be])?;
    }
    w.finish()?;
    if let Some(path) = &a.curve_out {
        let mut w = TableWriter::create(path, &["u", "value"]).context("stage write curve")?;
        for k in 0..a.samples {
            let u = k as f64 / a.samples as f64;
            w.row(&[u, model.eval(u)])?;
        }
        w.finish()?;
    }
    let res = model.residual(&y, &amp, &phase);
    progress!("shape", "{} samples, D={}, residual {}", y.len(), cfg.shape_harmonics, fmt_f64(res));
    Ok(())
}

/// ECG to peaks to respiratory waveform.
#[derive(Debug, Args)]
pub struct EdrArgs {
    /// ECG CSV with columns time,mV (`-` for stdin)
    #[arg(long)]
    pub input: String,
    /// Treat the input as one number per line sampled at --fs
    #[arg(long, requires = "fs")]
    pub raw: bool,
    /// Sampling rate of raw input, Hz
    #[arg(long)]
    pub fs: Option<f64>,
    /// EDR waveform (time,value)
    #[arg(long)]
    pub out: String,
    /// Retained peaks (time,amplitude)
    #[arg(long)]
    pub peaks_out: Option<String>,
    #[arg(long, value_enum)]
    pub polarity: Option<PolarityArg>,
    /// Premature-beat exclusion
    #[arg(long, value_enum)]
    pub pvc: Option<Switch>,
    /// EDR sampling rate, Hz
    #[arg(long)]
    pub eta: Option<f64>,
    /// Blending spline order
    #[arg(long)]
    pub order: Option<usize>,
}

pub fn edr(a: &EdrArgs, mut cfg: PipelineConfig) -> Result<()> {
    set(&mut cfg.eta, a.eta);
    set(&mut cfg.order, a.order);
    set(
        &mut cfg.polarity,
        a.polarity.map(|p| match p {
            PolarityArg::R => Polarity::R,
            PolarityArg::S => Polarity::S,
        }),
    );
    set(&mut cfg.pvc, a.pvc.map(|s| matches!(s, Switch::On)));
    cfg.validate().context("stage config")?;
    let record = if a.raw {
        let fs = a.fs.expect("required by clap");
        EcgRecord::new(fs, read_raw(&a.input).context("stage read input")?).context("stage read input")?
    } else {
        let t = Table::read(&a.input).context("stage read input")?;
        let times = t.finite("time").context("stage read input")?;
        let mv = t.finite("mV").context("stage read input")?;
        let (start, dt) = uniform_spacing(&t, &times, "time").context("stage read input")?;
        let fs = a.fs.unwrap_or(1.0 / dt);
        let mut r = EcgRecord::new(fs, mv).context("stage read input")?;
        r.start = start;
        r
    };
    let clean = remove_baseline(&record).context("stage baseline")?;
    let peaks = detect_peaks(&clean, cfg.polarity, &cfg.detector()).context("stage peaks")?;
    let found = peaks.len();
    let peaks = exclude_pvc(&peaks, if cfg.pvc { cfg.pvc_ratio } else { 0.0 }).context("stage pvc")?;
    let wave = build_edr(&peaks, cfg.order, cfg.eta).context("stage edr")?;
    if let Some(path) = &a.peaks_out {
        let mut w = TableWriter::create(path, &["time", "amplitude"]).context("stage write peaks")?;
        for (t, v) in peaks.times.iter().zip(&peaks.amplitudes) {
            w.row(&[*t, *v])?;
        }
        w.finish()?;
    }
    let mut w = TableWriter::create(&a.out, &["time", "value"]).context("stage write output")?;
    for (t, v) in wave.times().iter().zip(&wave.values) {
        w.row(&[*t, *v])?;
    }
    w.finish()?;
    progress!(
        "edr",
        "{} ECG samples at {} Hz, {found} peaks, {} kept, {} EDR samples at {} Hz",
        record.samples.len(),
        record.fs,
        peaks.len(),
        wave.values.len(),
        cfg.eta
    );
    Ok(())
}

/// Prediction probability and Spearman correlation.
#[derive(Debug, Args)]
pub struct PkArgs {
    /// CSV with an indicator and an outcome column
    #[arg(long)]
    pub input: String,
    #[arg(long, default_value = "x")]
    pub x: String,
    #[arg(long, default_value = "y")]
    pub y: String,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn pk(a: &PkArgs, _cfg: PipelineConfig) -> Result<()> {
    let t = Table::read(&a.input).context("stage read input")?;
    let x = t.finite(&a.x).context("stage read input")?;
    let y = t.finite(&a.y).context("stage read input")?;
    let counts = PairCounts::classify(&x, &y).context("stage pk")?;
    match counts.pk_ratio() {
        Some((num, den)) => {
            let g = gcd(num, den).max(1);
            println!("pk={}/{}", num / g, den / g);
            println!("pk_value={}", fmt_f64(num as f64 / den as f64));
        }
        None => {
            println!("pk=undefined");
            println!("pk_value=");
        }
    }
    let rho = spearman(&x, &y).map(fmt_f64).unwrap_or_else(|_| "undefined".to_string());
    println!("spearman={rho}");
    println!("n={}", x.len());
    progress!("pk", "{} pairs", x.len());
    Ok(())
}

/// Effect-site concentration from end-tidal concentration.
#[derive(Debug, Args)]
pub struct EffectSiteArgs {
    /// CSV with columns time,c_et (seconds)
    #[arg(long)]
    pub input: String,
    /// Output (time,c_et,c_eff)
    #[arg(long)]
    pub out: String,
    /// Equilibration rate, per minute
    #[arg(long)]
    pub ke0: Option<f64>,
    /// Initial effect-site concentration (defaults to the first c_et)
    #[arg(long, allow_hyphen_values = true)]
    pub c0: Option<f64>,
}

pub fn effectsite(a: &EffectSiteArgs, mut cfg: PipelineConfig) -> Result<()> {
    set(&mut cfg.ke0, a.ke0);
    cfg.validate().context("stage config")?;
    let t = Table::read(&a.input).context("stage read input")?;
    let times = t.finite("time").context("stage read input")?;
    let c_et = t.finite("c_et").context("stage read input")?;
    let c0 = a.c0.unwrap_or(c_et[0]);
    let trace = effect_site(&times, &c_et, cfg.ke0, c0).context("stage effect site")?;
    let mut w = TableWriter::create(&a.out, &["time", "c_et", "c_eff"]).context("stage write output")?;
    for i in 0..trace.times.len() {
        w.row(&[trace.times[i], trace.c_et[i], trace.c_eff[i]])?;
    }
    w.finish()?;
    progress!("effectsite", "{} samples, ke0 {} /min", times.len(), cfg.ke0);
    Ok(())
}

/// Synthetic signals with ground truth.
#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Target SNR in dB, or `none` for a noiseless signal
    #[arg(long, allow_hyphen_values = true)]
    pub snr: Option<String>,
    /// Sample spacing in seconds
    #[arg(long)]
    pub dt: Option<f64>,
    /// Duration in seconds
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Tone frequency in Hz for --kind tone
    #[arg(long)]
    pub tone_freq: Option<f64>,
    /// Composite signal (time,value)
    #[arg(long)]
    pub out: String,
    /// Ground truth: clean, trend, noise and per-component amp, phase, freq, active
    #[arg(long)]
    pub truth_out: Option<String>,
}

pub fn simulate(a: &SimulateArgs, mut cfg: PipelineConfig) -> Result<()> {
    set(&mut cfg.seed, a.seed);
    if let Some(s) = &a.snr {
        cfg.set("snr", s, "--snr").context("stage config")?;
    }
    set(&mut cfg.sim_dt, a.dt);
    set(&mut cfg.duration, a.duration);
    set(
        &mut cfg.sim_kind,
        a.kind.map(|k| match k {
            KindArg::TwoComponent => SimKind::TwoComponent,
            KindArg::Tone => SimKind::Tone,
        }),
    );
    set(&mut cfg.tone_freq, a.tone_freq);
    cfg.validate().context("stage config")?;
    let sim = cfg.sim();
    let sig = match cfg.sim_kind {
        SimKind::TwoComponent => two_component(&sim),
        SimKind::Tone => tone(&sim, cfg.tone_freq),
    }
    .context("stage simulate")?;
    let times = sig.times();
    let mut w = TableWriter::create(&a.out, &["time", "value"]).context("stage write output")?;
    for (t, y) in times.iter().zip(&sig.y) {
        w.row(&[*t, *y])?;
    }
    w.finish()?;
    if let Some(path) = &a.truth_out {
        let mut head: Vec<String> = ["time", "clean", "trend", "noise"].iter().map(|s| s.to_string()).collect();
        for k in 1..=sig.components.len() {
            for f in ["amp", "phase", "freq", "active"] {
                head.push(format!("{f}{k}"));
            }
        }
        let head: Vec<&str> = head.iter().map(String::as_str).collect();
        let mut w = TableWriter::create(path, &head).context("stage write truth")?;
        let clean = sig.clean();
        for i in 0..times.len() {
            let mut row = vec![times[i], clean[i], sig.trend[i], sig.noise[i]];
            for c in &sig.components {
                row.extend([c.amplitude[i], c.phase[i], c.inst_freq[i], if c.active[i] { 1.0 } else { 0.0 }]);
            }
            w.row(&row)?;
        }
        w.finish()?;
    }
    let snr = cfg.snr.map_or_else(|| "none".to_string(), fmt_f64);
    progress!("simulate", "{} samples at dt={}, {} component(s), snr {snr} dB, seed {}", times.len(), cfg.sim_dt, sig.components.len(), cfg.seed);
    Ok(())
}
