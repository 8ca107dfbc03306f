//! Command line front end: `synth`, `reconstruct`, `repro` and `validate`.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 solver error,
//! 4 I/O or file format error.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{parse_slice, GeometrySection, RunConfig, RunSetup, ScattererEntry, SensorSection};
use crate::fieldio::{file_sha256, read_tdis, write_atomic, write_field, write_tdis, FieldMeta};
use crate::forward::bie::synth_bie_2d;
use crate::forward::{add_noise, synth_point_model, ForwardModel, ScatteredDataSet};
use crate::geometry::{check_separation, make_sampling_grid, SamplingGrid, SeparationReport, Shape};
use crate::indicator::{sweep_cached, sweep_i1prime, ConvNormCache, IndicatorField, IndicatorKind, Pairing};
use crate::{Dimension, Error, Point, Result};

#[derive(Debug, Parser)]
#[command(name = "tdsm", version, about = "Direct sampling imaging of acoustic scatterers from time-domain data")]
pub struct Cli {
    /// Worker threads for synthesis and sweeps (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize scattered data from a config file and write a `.tdis` file.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `forward.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep an indicator over a sampling grid and write a `.csv` field.
    Reconstruct {
        #[arg(long)]
        data: PathBuf,
        /// One of i1, i2, i3, i1prime.
        #[arg(long)]
        indicator: String,
        #[arg(long)]
        out: PathBuf,
        /// Grid as `lo:hi:n` per axis, comma separated, e.g. `-2.6:2.6:21,-2.6:2.6:21`.
        #[arg(long)]
        grid: Option<String>,
        /// Config whose grid and scatterers are used instead of the ones
        /// recorded in the data file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also export the plane `<axis>=<coord>` of a 3D field (repeatable).
        #[arg(long)]
        slice: Vec<String>,
        /// `correlation` or `convolution`; defaults to the config's choice.
        #[arg(long)]
        pairing: Option<String>,
    },
    /// Rerun one of the canned experiments 1 to 6.
    Repro {
        id: u32,
        #[arg(long, default_value = "repro")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config and the imaging geometry without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Parses `lo:hi:n[,lo:hi:n...]`.
pub fn parse_grid(s: &str) -> Result<SamplingGrid> {
    let mut bounds = Vec::new();
    let mut counts = Vec::new();
    for axis in s.split(',') {
        let parts: Vec<&str> = axis.split(':').map(str::trim).collect();
        let parsed = match parts.as_slice() {
            [lo, hi, n] => lo
                .parse::<f64>()
                .ok()
                .zip(hi.parse::<f64>().ok())
                .zip(n.parse::<usize>().ok()),
            _ => None,
        };
        let ((lo, hi), n) = parsed
            .ok_or_else(|| Error::InvalidArgument(format!("grid axis `{axis}` is not of the form lo:hi:n")))?;
        bounds.push((lo, hi));
        counts.push(n);
    }
    make_sampling_grid(&bounds, &counts)
}

/// Runs the configured forward model and applies noise. The effective
/// config and any point-regime warnings are recorded in the metadata.
pub fn synthesize(setup: &RunSetup) -> Result<ScatteredDataSet> {
    let warnings = setup.scatterers.validate(&setup.signal, setup.medium)?;
    let clean = match setup.scatterers.model {
        ForwardModel::PointModel => synth_point_model(
            &setup.scatterers.points,
            &setup.sensors,
            &setup.sensors,
            setup.time,
            setup.signal,
            setup.medium,
            setup.dimension,
            setup.bie.spectral,
        )?,
        ForwardModel::Bie2d => synth_bie_2d(
            &setup.scatterers.boundaries,
            &setup.sensors,
            &setup.sensors,
            setup.time,
            setup.signal,
            setup.medium,
            setup.bie,
        )?,
    };
    let mut data = add_noise(&clean, setup.noise)?;
    data.metadata.insert("config".into(), setup.effective.to_json());
    if !warnings.is_empty() {
        data.metadata.insert("warnings".into(), warnings.join("; "));
    }
    Ok(data)
}

/// Config recorded in a data file, if any.
pub fn recorded_config(data: &ScatteredDataSet) -> Result<Option<RunConfig>> {
    data.metadata
        .get("config")
        .map(|text| RunConfig::from_json(text).and_then(|c| c.effective()))
        .transpose()
}

/// Data for the scatterers of `config` translated by `z − reference`, where
/// the reference is the center of the first scatterer; noise-free.
pub fn translated_synth(config: &RunConfig, z: &Point) -> Result<ScatteredDataSet> {
    let mut c = config.effective()?;
    c.forward.noise = 0.0;
    let g = c
        .geometry
        .as_mut()
        .ok_or_else(|| Error::config("geometry", "missing section"))?;
    let scatterers = g.scatterers.as_mut().expect("filled by effective");
    let reference = scatterers
        .first()
        .map(|s| s.center.clone())
        .ok_or_else(|| Error::config("geometry.scatterers", "i1prime needs at least one scatterer"))?;
    for s in scatterers.iter_mut() {
        for (a, v) in s.center.iter_mut().enumerate() {
            *v += z[a] - reference[a];
        }
    }
    synthesize(&c.build()?)
}

/// Sweeps every indicator in `kinds`. `config` supplies the forward model
/// needed by `I1′`.
pub fn reconstruct(
    data: &ScatteredDataSet,
    grid: &SamplingGrid,
    kinds: &[IndicatorKind],
    pairing: Pairing,
    config: Option<&RunConfig>,
) -> Result<Vec<IndicatorField>> {
    let direct: Vec<IndicatorKind> = kinds.iter().copied().filter(|k| *k != IndicatorKind::I1Prime).collect();
    let cache = ConvNormCache::with_pairing(data, pairing)?;
    let mut fields = sweep_cached(&cache, grid, &direct)?.into_iter();
    let mut prime = None;
    if kinds.contains(&IndicatorKind::I1Prime) {
        let config = config.ok_or_else(|| {
            Error::InvalidArgument("i1prime needs the scatterer config; the data file records none".into())
        })?;
        prime = Some(sweep_i1prime(data, grid, pairing, |z| translated_synth(config, z))?);
    }
    Ok(kinds
        .iter()
        .map(|k| {
            if *k == IndicatorKind::I1Prime {
                prime.clone().expect("computed above")
            } else {
                fields.next().expect("one field per kind")
            }
        })
        .collect())
}

fn default_grid(dimension: Dimension) -> Result<SamplingGrid> {
    match dimension {
        Dimension::Two => make_sampling_grid(&[(-2.6, 2.6); 2], &[21, 21]),
        Dimension::Three => make_sampling_grid(&[(-2.0, 2.0); 3], &[21, 21, 21]),
    }
}

fn describe_point(p: &Point, axes: usize) -> String {
    let c: Vec<String> = p[..axes].iter().map(|v| format!("{v:.4}")).collect();
    format!("({})", c.join(", "))
}

fn print_separation(report: &SeparationReport) {
    println!(
        "separation: grid-sensor distance {:.4}, max scatterer diameter {:.4}, {}",
        report.grid_sensor_distance,
        report.max_diameter,
        if report.all_passed() { "all checks passed" } else { "checks failed" }
    );
    for w in &report.warnings {
        println!("warning: {w}");
    }
}

fn slice_path(out: &Path, axis: usize, coord: f64) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}_slice_{}{coord:+.3}.csv", ["x", "y", "z"][axis]))
}

/// Writes `field` and its requested slices; returns the written paths.
fn write_outputs(
    field: &IndicatorField,
    out: &Path,
    slices: &[(usize, f64)],
    meta: &FieldMeta,
) -> Result<Vec<PathBuf>> {
    write_field(field, out, meta)?;
    let mut written = vec![out.to_path_buf()];
    println!(
        "{}: argmax {} at {} value {:e} -> {}",
        field.kind,
        field.argmax,
        describe_point(&field.argmax_point(), field.grid.axes()),
        field.max_value(),
        out.display()
    );
    if !field.flagged.is_empty() {
        println!("warning: {} probes coincide with sensors and were set to 0", field.flagged.len());
    }
    for (axis, coord) in slices {
        let s = field.slice(*axis, *coord)?;
        let path = slice_path(out, *axis, *coord);
        write_field(&s, &path, meta)?;
        written.push(path);
    }
    Ok(written)
}

fn boundaries_of(config: Option<&RunConfig>) -> Vec<crate::geometry::BoundaryCurve> {
    config
        .and_then(|c| c.build().ok())
        .map(|s| s.scatterers.boundaries)
        .unwrap_or_default()
}

pub fn cmd_synth(config: &Path, out: &Path, seed: Option<u64>) -> Result<ScatteredDataSet> {
    let mut c = RunConfig::load(config)?;
    if let Some(s) = seed {
        c.forward.seed = s;
    }
    let setup = c.build()?;
    let data = synthesize(&setup)?;
    write_tdis(&data, out)?;
    let (nm, nt, ni) = data.shape();
    println!(
        "{} data {nm}x{nt}x{ni}, noise {}, max |u| {:e} -> {}",
        setup.scatterers.model.name(),
        setup.noise.level,
        data.max_abs(),
        out.display()
    );
    if let Some(w) = data.metadata.get("warnings") {
        println!("warning: {w}");
    }
    Ok(data)
}

pub fn cmd_reconstruct(
    data_path: &Path,
    kind: IndicatorKind,
    pairing: Option<Pairing>,
    grid: Option<&str>,
    config: Option<&Path>,
    slices: &[String],
    out: &Path,
) -> Result<IndicatorField> {
    let data = read_tdis(data_path)?;
    let config = match config {
        Some(p) => Some(RunConfig::load(p)?.effective()?),
        None => recorded_config(&data)?,
    };
    let grid = match (grid, &config) {
        (Some(g), _) => parse_grid(g)?,
        (None, Some(c)) => c.build()?.grid,
        (None, None) => default_grid(data.dimension)?,
    };
    if grid.axes() != data.dimension.as_u32() as usize {
        return Err(Error::InvalidArgument(format!(
            "{}D grid for {}D data",
            grid.axes(),
            data.dimension.as_u32()
        )));
    }
    let slices: Vec<(usize, f64)> = slices.iter().map(|s| parse_slice(s)).collect::<Result<_>>()?;
    print_separation(&check_separation(&grid, &data.sensors, &boundaries_of(config.as_ref())));
    let pairing = pairing
        .or_else(|| config.as_ref().map(|c| c.reconstruct.pairing))
        .unwrap_or_default();
    let field = reconstruct(&data, &grid, &[kind], pairing, config.as_ref())?.remove(0);
    let meta = field_meta(data_path, pairing, config.as_ref())?;
    write_outputs(&field, out, &slices, &meta)?;
    Ok(field)
}

fn field_meta(data_path: &Path, pairing: Pairing, config: Option<&RunConfig>) -> Result<FieldMeta> {
    let mut extra = vec![
        ("data".to_string(), data_path.file_name().unwrap_or_default().to_string_lossy().into_owned()),
        ("pairing".to_string(), pairing.to_string()),
    ];
    if let Some(c) = config {
        extra.push(("config".into(), c.to_json()));
    }
    Ok(FieldMeta {
        data_sha256: Some(file_sha256(data_path)?),
        extra,
    })
}

pub fn cmd_validate(config: &Path) -> Result<SeparationReport> {
    let setup = RunConfig::load(config)?.build()?;
    for w in setup.scatterers.validate(&setup.signal, setup.medium)? {
        println!("warning: {w}");
    }
    let report = check_separation(&setup.grid, &setup.sensors, &setup.scatterers.boundaries);
    println!("config ok: {}", setup.effective.to_json());
    print_separation(&report);
    Ok(report)
}

fn base(dimension: u32, sensors: SensorSection, scatterers: Vec<ScattererEntry>) -> RunConfig {
    RunConfig {
        signal: Default::default(),
        medium: Default::default(),
        time: Default::default(),
        geometry: Some(GeometrySection {
            dimension,
            sensors: Some(sensors),
            grid: Default::default(),
            scatterers: Some(scatterers),
        }),
        forward: Default::default(),
        reconstruct: Default::default(),
    }
}

fn entry(shape: Shape, center: &[f64], scale: f64) -> ScattererEntry {
    ScattererEntry {
        shape,
        center: center.to_vec(),
        scale,
        strength: 1.0,
    }
}

fn points(centers: &[[f64; 2]]) -> Vec<ScattererEntry> {
    centers.iter().map(|c| entry(Shape::Point, c, 1.0)).collect()
}

/// One run of the `I1`/`I2` pair (`T = 25`) and one of `I3` (`T = 15`).
fn split_by_indicator(name: &str, c: RunConfig) -> Vec<(String, RunConfig)> {
    let mut a = c.clone();
    a.reconstruct.indicators = vec!["i1".into(), "i2".into()];
    let mut b = c;
    b.reconstruct.indicators = vec!["i3".into()];
    vec![(format!("{name}_t25"), a), (format!("{name}_t15"), b)]
}

/// Canned runs of experiment `id`, each with noise level 5%.
pub fn repro_configs(id: u32, seed: u64) -> Result<Vec<(String, RunConfig)>> {
    let full = SensorSection::default();
    let mut runs: Vec<(String, RunConfig)> = Vec::new();
    match id {
        1 => runs.extend(split_by_indicator("ex1_point", base(2, full, points(&[[0.0, 0.0]])))),
        2 => {
            let centers = [[-1.0, -1.0], [1.0, 1.5], [1.5, -1.0], [-1.5, 1.5], [0.0, 0.0]];
            for n in [2, 3, 5] {
                let c = base(2, full.clone(), points(&centers[..n]));
                runs.extend(split_by_indicator(&format!("ex2_{n}points"), c));
            }
        }
        3 => {
            for shape in [Shape::Circle, Shape::Kite, Shape::Starfish] {
                for (tag, center) in [("origin", [0.0, 0.0]), ("shifted", [1.0, 1.0])] {
                    let mut c = base(2, full.clone(), vec![entry(shape, &center, 1.0)]);
                    c.forward.model = ForwardModel::Bie2d;
                    runs.extend(split_by_indicator(&format!("ex3_{shape}_{tag}"), c));
                }
            }
            for (tag, count, span) in [("pi", 10, PI), ("3pi2", 15, 1.5 * PI)] {
                let sensors = SensorSection {
                    count,
                    aperture_span: span,
                    ..SensorSection::default()
                };
                let mut c = base(2, sensors, vec![entry(Shape::Starfish, &[0.0, 0.0], 1.0)]);
                c.forward.model = ForwardModel::Bie2d;
                runs.extend(split_by_indicator(&format!("ex3_starfish_aperture_{tag}"), c));
            }
        }
        4 => {
            for shape in [Shape::Acorn, Shape::RoundedSquare] {
                let scatterers = vec![entry(shape, &[0.0, 0.0], 1.0), entry(Shape::Point, &[2.2, 2.2], 100.0)];
                let mut c = base(2, full.clone(), scatterers);
                c.forward.model = ForwardModel::Bie2d;
                runs.extend(split_by_indicator(&format!("ex4_{shape}_point"), c));
            }
        }
        5 => {
            let pairs = [
                ("circle_kite", (Shape::Circle, 4.0 / 9.0), (Shape::Kite, 0.5)),
                ("kite_peanut", (Shape::Kite, 0.5), (Shape::Peanut, 1.0)),
                ("acorn_starfish", (Shape::Acorn, 0.5), (Shape::Starfish, 2.0 / 3.0)),
            ];
            for (name, (a, sa), (b, sb)) in pairs {
                let mut c = base(
                    2,
                    full.clone(),
                    vec![entry(a, &[-1.0, -1.0], sa), entry(b, &[1.0, 1.0], sb)],
                );
                c.forward.model = ForwardModel::Bie2d;
                c.time.terminal = Some(25.0);
                c.time.steps = 256;
                c.reconstruct.indicators = vec!["i3".into()];
                runs.push((format!("ex5_{name}"), c));
            }
        }
        6 => {
            let sphere = SensorSection {
                count: 50,
                ..SensorSection::default()
            };
            let cases: [(&str, Vec<[f64; 3]>); 3] = [
                ("d1", vec![[0.0, 0.0, 0.0]]),
                ("d2", vec![[0.4, -0.8, 0.2]]),
                ("d3_d4", vec![[0.6, 0.8, 1.0], [-1.0, -0.8, -0.6]]),
            ];
            for (name, centers) in cases {
                let scatterers = centers.iter().map(|c| entry(Shape::Point, c, 1.0)).collect();
                let mut c = base(3, sphere.clone(), scatterers);
                c.time.terminal = Some(19.0);
                c.time.steps = 256;
                c.reconstruct.indicators = vec!["i3".into()];
                let [_, y, z] = centers[0];
                c.reconstruct.slices = vec![format!("z={z}"), format!("y={y}")];
                runs.push((format!("ex6_{name}"), c));
            }
        }
        7 => {
            return Err(Error::InvalidArgument(
                "experiment 7 is out of scope: volumetric 3D forward solver".into(),
            ))
        }
        _ => return Err(Error::InvalidArgument(format!("no experiment {id}; expected 1 to 6"))),
    }
    for (_, c) in runs.iter_mut() {
        c.forward.noise = 0.05;
        c.forward.seed = seed;
    }
    Ok(runs)
}

/// Runs every canned config of experiment `id` into `out`; returns the
/// written files.
pub fn cmd_repro(id: u32, out: &Path, seed: Option<u64>) -> Result<Vec<PathBuf>> {
    let runs = repro_configs(id, seed.unwrap_or(1))?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut written = Vec::new();
    for (name, config) in runs {
        let setup = config.build()?;
        let effective = setup.effective.clone();
        let config_path = out.join(format!("{name}.json"));
        write_atomic(&config_path, effective.to_json().as_bytes())?;
        written.push(config_path);
        let data = synthesize(&setup)?;
        let data_path = out.join(format!("{name}.tdis"));
        write_tdis(&data, &data_path)?;
        written.push(data_path.clone());
        println!("{name}: {} data {:?}", setup.scatterers.model.name(), data.shape());
        print_separation(&check_separation(&setup.grid, &setup.sensors, &setup.scatterers.boundaries));
        let meta = field_meta(&data_path, setup.pairing, Some(&effective))?;
        let fields = reconstruct(&data, &setup.grid, &setup.indicators, setup.pairing, Some(&effective))?;
        for field in &fields {
            let path = out.join(format!("{name}_{}.csv", field.kind));
            written.extend(write_outputs(field, &path, &setup.slices, &meta)?);
        }
    }
    Ok(written)
}

fn dispatch(cli: Cli) -> Result<()> {
    if cli.threads > 0 {
        // Fails only if a pool already exists, in which case it is reused.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    match cli.command {
        Command::Synth { config, out, seed } => cmd_synth(&config, &out, seed).map(|_| ()),
        Command::Reconstruct {
            data,
            indicator,
            out,
            grid,
            config,
            slice,
            pairing,
        } => {
            let kind: IndicatorKind = indicator.parse()?;
            let pairing = pairing.map(|p| p.parse::<Pairing>()).transpose()?;
            cmd_reconstruct(&data, kind, pairing, grid.as_deref(), config.as_deref(), &slice, &out).map(|_| ())
        }
        Command::Repro { id, out, seed } => cmd_repro(id, &out, seed).map(|_| ()),
        Command::Validate { config } => cmd_validate(&config).map(|_| ()),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
