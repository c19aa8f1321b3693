//! Command-line front end: model files in, CSVs and gnuplot scripts out.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use nhlattice::dynamics::{evolve, gaussian_packet, line_partition, region_weights};
use nhlattice::efc::{
    dds_report_from_contour, efc_extract, spectral_function, DDS_SPREAD_THRESHOLD,
};
use nhlattice::error::{Error, ErrorClass};
use nhlattice::geometry::LatticeGeometry;
use nhlattice::io;
use nhlattice::model::{builtin_spec, BlochModel, BUILTIN_NAMES};
use nhlattice::operator::{line_potential, real_space_operator};
use nhlattice::scatter::{
    classify_scattering, scattered_profile, symmetry_protected_directions, ClassifyOptions,
    LatticeFrame,
};
use nhlattice::spectra::{frequency_density, localization_metrics, obc_spectrum};
use nhlattice::{parse_model_file, ModelSpec};

#[derive(Parser)]
#[command(
    name = "nhlattice",
    version,
    about = "Non-Hermitian lattice toolkit: contours, scattering, dynamics, spectra"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Built-in model name or path to a model file.
    #[arg(long)]
    model: String,
    /// Parameter override `name=value`; repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// Output directory (default: $NHLATTICE_OUT or ./nhlattice-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for grid evaluations (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Band energies at one momentum or on a grid.
    Bands {
        #[command(flatten)]
        common: Common,
        /// Momentum `kx,ky` (radians).
        #[arg(long, value_name = "KX,KY", allow_hyphen_values = true)]
        k: Option<String>,
        /// Grid resolution for a full band-structure CSV.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Equal-frequency contour extraction.
    Efc {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        omega: f64,
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
    /// Spectral function on a momentum grid.
    Specfun {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        omega: f64,
        #[arg(long, default_value_t = 0.02)]
        eta: f64,
        #[arg(long, default_value_t = 256)]
        grid: usize,
    },
    /// Decay-rate splitting report at one frequency.
    Dds {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        omega: f64,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        /// Spread threshold for declaring splitting.
        #[arg(long, default_value_t = DDS_SPREAD_THRESHOLD)]
        tau: f64,
    },
    /// Classify impurity-line scattering for one incident momentum.
    Scatter {
        #[command(flatten)]
        common: Common,
        /// Incident momentum `kx,ky`.
        #[arg(long, value_name = "KX,KY", allow_hyphen_values = true)]
        ki: String,
        /// Line direction `p,q` (coprime integers).
        #[arg(long, value_name = "P,Q", allow_hyphen_values = true)]
        direction: String,
        /// Incident band index in the (Re, Im) sort.
        #[arg(long)]
        band: Option<usize>,
        /// Broadening schedule, comma separated.
        #[arg(long, default_value = "1e-2,1e-3,1e-4", allow_hyphen_values = true)]
        etas: String,
    },
    /// Residue-solution scattered-wave profile (single-band models).
    Profile {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "KX,KY", allow_hyphen_values = true)]
        ki: String,
        #[arg(long, value_name = "P,Q", allow_hyphen_values = true)]
        direction: String,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, default_value_t = -30, allow_negative_numbers = true)]
        rmin: i64,
        #[arg(long, default_value_t = 30, allow_negative_numbers = true)]
        rmax: i64,
        #[arg(long, default_value = "1e-2,1e-3,1e-4", allow_hyphen_values = true)]
        etas: String,
    },
    /// Gaussian wave packet scattering off an impurity line.
    Wavepacket {
        #[command(flatten)]
        common: Common,
        /// Line direction `p,q`.
        #[arg(long, value_name = "P,Q", allow_hyphen_values = true)]
        line: String,
        /// Impurity strength.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        lambda: f64,
        /// Line anchor site (default: lattice center).
        #[arg(long, value_name = "X,Y", allow_hyphen_values = true)]
        anchor: Option<String>,
        /// Packet center `x0,y0` (default: lattice center shifted left).
        #[arg(long, value_name = "X,Y", allow_hyphen_values = true)]
        center: Option<String>,
        #[arg(long, default_value_t = 4.0)]
        sigma: f64,
        /// Packet momentum `kx,ky`.
        #[arg(long, value_name = "KX,KY", allow_hyphen_values = true)]
        k: String,
        #[arg(long, default_value = "square")]
        geometry: String,
        #[arg(long, default_value_t = 40)]
        size: usize,
        /// Time step (clamped to the stability bound).
        #[arg(long, default_value_t = 0.02)]
        dt: f64,
        /// Snapshot times, comma separated.
        #[arg(long, default_value = "1,5,9,13,17")]
        times: String,
        /// Half-width of the strip excluded from side weights.
        #[arg(long, default_value_t = 3)]
        strip: i64,
        /// Disable per-step renormalization.
        #[arg(long)]
        no_renormalize: bool,
    },
    /// Open-boundary spectrum and frequency-resolved density.
    Obc {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "diamond")]
        geometry: String,
        #[arg(long, default_value_t = 40)]
        size: usize,
        /// Frequency for the density field (omit for spectrum only).
        #[arg(long, allow_negative_numbers = true)]
        omega: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 3)]
        edge_width: usize,
        #[arg(long, default_value_t = 8000)]
        cap: usize,
    },
    /// Band-structure symmetries and protected line directions.
    Symmetry {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 32)]
        grid: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are success, anything else is usage error
            if e.use_stderr() {
                eprintln!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        let code = match e.class() {
            ErrorClass::Input => 1,
            ErrorClass::Numerical => 2,
        };
        std::process::exit(code);
    }
}

fn parse_pair_f64(text: &str, what: &str) -> Result<[f64; 2], Error> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::InvalidArgument(format!("{what} must be `a,b`, got `{text}`")));
    }
    match (parts[0].trim().parse::<f64>(), parts[1].trim().parse::<f64>()) {
        (Ok(a), Ok(b)) => Ok([a, b]),
        _ => Err(Error::InvalidArgument(format!("{what} must be two numbers, got `{text}`"))),
    }
}

fn parse_pair_i64(text: &str, what: &str) -> Result<(i64, i64), Error> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::InvalidArgument(format!("{what} must be `p,q`, got `{text}`")));
    }
    match (parts[0].trim().parse::<i64>(), parts[1].trim().parse::<i64>()) {
        (Ok(p), Ok(q)) => Ok((p, q)),
        _ => Err(Error::InvalidArgument(format!("{what} must be two integers, got `{text}`"))),
    }
}

fn parse_list_f64(text: &str, what: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad {what} entry `{s}`")))
        })
        .collect()
}

struct Run {
    model: BlochModel,
    out_dir: PathBuf,
    manifest: Vec<(String, String)>,
    started: Instant,
}

impl Run {
    fn new(common: &Common, subcommand: &str) -> Result<Self, Error> {
        if let Some(n) = common.threads {
            // double initialization (e.g. in tests) is harmless
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        let mut spec: ModelSpec = if BUILTIN_NAMES.contains(&common.model.as_str()) {
            builtin_spec(&common.model)?
        } else {
            let text = std::fs::read_to_string(&common.model)?;
            parse_model_file(&text)?
        };
        for override_text in &common.params {
            let (name, value) = override_text.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "--param expects NAME=VALUE, got `{override_text}`"
                ))
            })?;
            let value: f64 = value.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!("bad value in --param `{override_text}`"))
            })?;
            if !spec.params.contains_key(name.trim()) {
                return Err(Error::UnknownParam(name.trim().to_string()));
            }
            spec.params.insert(name.trim().to_string(), value);
        }
        let model = BlochModel::build(&spec)?;
        let out_dir = common
            .out
            .clone()
            .or_else(|| std::env::var_os("NHLATTICE_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("nhlattice-out"));
        let mut manifest = vec![
            ("tool".to_string(), format!("nhlattice {}", env!("CARGO_PKG_VERSION"))),
            ("subcommand".to_string(), subcommand.to_string()),
            ("model".to_string(), common.model.clone()),
            ("model_name".to_string(), spec.name.clone()),
            ("dim".to_string(), spec.dim.to_string()),
        ];
        for (k, v) in &spec.params {
            manifest.push((format!("param.{k}"), io::fmt_f64(*v)));
        }
        Ok(Self { model, out_dir, manifest, started: Instant::now() })
    }

    fn record(&mut self, key: &str, value: impl ToString) {
        self.manifest.push((key.to_string(), value.to_string()));
    }

    fn write(&self, name: &str, content: &str) -> Result<PathBuf, Error> {
        let path = self.out_dir.join(name);
        io::write_text(&path, content)?;
        Ok(path)
    }

    fn finish(mut self, subcommand: &str) -> Result<(), Error> {
        self.manifest
            .push(("wall_ms".to_string(), self.started.elapsed().as_millis().to_string()));
        let path = self.out_dir.join(format!("{subcommand}-manifest.txt"));
        io::write_text(&path, &io::manifest(&self.manifest))?;
        Ok(())
    }
}

fn geometry_by_name(name: &str, size: usize) -> Result<Arc<LatticeGeometry>, Error> {
    let g = match name {
        "square" => LatticeGeometry::square(size)?,
        "diamond" => LatticeGeometry::diamond(size)?,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown geometry `{other}` (expected square or diamond)"
            )))
        }
    };
    Ok(Arc::new(g))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Bands { common, k, grid } => {
            let mut run = Run::new(&common, "bands")?;
            match (k, grid) {
                (Some(k), _) => {
                    let k = parse_pair_f64(&k, "--k")?;
                    run.record("k", format!("{},{}", io::fmt_f64(k[0]), io::fmt_f64(k[1])));
                    let bands = run.model.bands(k)?;
                    for (i, e) in bands.energies.iter().enumerate() {
                        println!("band {i}: {} {}", io::fmt_f64(e.re), io::fmt_f64(e.im));
                    }
                }
                (None, Some(n)) => {
                    run.record("grid", n);
                    let mut out = String::from("kx,ky,band,reE,imE\n");
                    let step = std::f64::consts::TAU / n as f64;
                    for iy in 0..=n {
                        for ix in 0..=n {
                            let k = [
                                -std::f64::consts::PI + ix as f64 * step,
                                -std::f64::consts::PI + iy as f64 * step,
                            ];
                            for (b, e) in run.model.bands(k)?.energies.iter().enumerate() {
                                out.push_str(&format!(
                                    "{},{},{},{},{}\n",
                                    io::fmt_f64(k[0]),
                                    io::fmt_f64(k[1]),
                                    b,
                                    io::fmt_f64(e.re),
                                    io::fmt_f64(e.im)
                                ));
                            }
                        }
                    }
                    let path = run.write("bands.csv", &out)?;
                    println!("wrote {}", path.display());
                }
                (None, None) => {
                    return Err(Error::InvalidArgument("bands needs --k or --grid".into()))
                }
            }
            run.finish("bands")
        }

        Command::Efc { common, omega, grid } => {
            let mut run = Run::new(&common, "efc")?;
            run.record("omega", io::fmt_f64(omega));
            run.record("grid", grid);
            let contour = efc_extract(&run.model, omega, grid)?;
            let csv = run.write("efc.csv", &io::contour_csv(&contour))?;
            run.write("efc.gp", &io::contour_plot_script("efc.csv", omega))?;
            println!(
                "wrote {} ({} polylines, {} points)",
                csv.display(),
                contour.polylines.len(),
                contour.point_count()
            );
            run.finish("efc")
        }

        Command::Specfun { common, omega, eta, grid } => {
            let mut run = Run::new(&common, "specfun")?;
            if eta <= 0.0 {
                return Err(Error::InvalidArgument("--eta must be positive".into()));
            }
            run.record("omega", io::fmt_f64(omega));
            run.record("eta", io::fmt_f64(eta));
            run.record("grid", grid);
            let step = std::f64::consts::TAU / grid as f64;
            let mut points = Vec::with_capacity((grid + 1) * (grid + 1));
            for iy in 0..=grid {
                for ix in 0..=grid {
                    let k = [
                        -std::f64::consts::PI + ix as f64 * step,
                        -std::f64::consts::PI + iy as f64 * step,
                    ];
                    points.push((k, spectral_function(&run.model, omega, k, eta)?));
                }
            }
            let csv = run.write("specfun.csv", &io::grid_csv(&points))?;
            run.write(
                "specfun.gp",
                &io::momentum_heatmap_script("specfun.csv", &format!("A(omega={omega}, k)")),
            )?;
            println!("wrote {}", csv.display());
            run.finish("specfun")
        }

        Command::Dds { common, omega, grid, tau } => {
            let mut run = Run::new(&common, "dds")?;
            run.record("omega", io::fmt_f64(omega));
            run.record("grid", grid);
            run.record("tau", io::fmt_f64(tau));
            let contour = efc_extract(&run.model, omega, grid)?;
            let report = dds_report_from_contour(&contour, tau);
            run.write("dds-efc.csv", &io::contour_csv(&contour))?;
            let mut text = format!(
                "omega={}\ndds_present={}\nim_min={}\nim_max={}\nim_spread={}\nempty_contour={}\n",
                io::fmt_f64(report.omega),
                report.dds_present,
                io::fmt_f64(report.im_min),
                io::fmt_f64(report.im_max),
                io::fmt_f64(report.im_spread),
                report.empty_contour,
            );
            for (i, pl) in report.per_polyline.iter().enumerate() {
                text.push_str(&format!(
                    "polyline.{i}=n_points:{} im_min:{} im_max:{}\n",
                    pl.n_points,
                    io::fmt_f64(pl.im_min),
                    io::fmt_f64(pl.im_max)
                ));
            }
            run.write("dds.txt", &text)?;
            println!(
                "dds_present={} im_spread={}",
                report.dds_present,
                io::fmt_f64(report.im_spread)
            );
            run.finish("dds")
        }

        Command::Scatter { common, ki, direction, band, etas } => {
            let mut run = Run::new(&common, "scatter")?;
            let k_i = parse_pair_f64(&ki, "--ki")?;
            let dir = parse_pair_i64(&direction, "--direction")?;
            let schedule = parse_list_f64(&etas, "--etas")?;
            let band = match band {
                Some(b) => b,
                None if run.model.dim() == 1 => 0,
                None => {
                    return Err(Error::InvalidArgument(
                        "multiband model: select the incident band with --band".into(),
                    ));
                }
            };
            run.record("ki", &ki);
            run.record("direction", &direction);
            run.record("band", band);
            run.record("etas", &etas);
            let opts = ClassifyOptions { eta_schedule: schedule, ..Default::default() };
            let report = classify_scattering(&run.model, k_i, band, dir, &opts)?;
            run.write("poles.csv", &io::scatter_csv(&report))?;
            println!(
                "classification={} kappa={} w={} E0={},{}",
                report.classification,
                io::fmt_f64(report.kappa),
                report.winding,
                io::fmt_f64(report.e0.re),
                io::fmt_f64(report.e0.im)
            );
            if let Some(pk) = report.partner_k {
                println!("partner_k={},{}", io::fmt_f64(pk[0]), io::fmt_f64(pk[1]));
            }
            run.finish("scatter")
        }

        Command::Profile { common, ki, direction, lambda, rmin, rmax, etas } => {
            let mut run = Run::new(&common, "profile")?;
            let k_i = parse_pair_f64(&ki, "--ki")?;
            let dir = parse_pair_i64(&direction, "--direction")?;
            let schedule = parse_list_f64(&etas, "--etas")?;
            run.record("ki", &ki);
            run.record("direction", &direction);
            run.record("lambda", io::fmt_f64(lambda));
            run.record("rmin", rmin);
            run.record("rmax", rmax);
            let opts = ClassifyOptions { eta_schedule: schedule, ..Default::default() };
            let profile = scattered_profile(
                &run.model,
                k_i,
                dir,
                Complex64::new(lambda, 0.0),
                rmin,
                rmax,
                &opts,
            )?;
            run.write("profile.csv", &io::profile_csv(&profile.values))?;
            println!(
                "classification={} kappa={}",
                profile.report.classification,
                io::fmt_f64(profile.report.kappa)
            );
            run.finish("profile")
        }

        Command::Wavepacket {
            common,
            line,
            lambda,
            anchor,
            center,
            sigma,
            k,
            geometry,
            size,
            dt,
            times,
            strip,
            no_renormalize,
        } => {
            let mut run = Run::new(&common, "wavepacket")?;
            let dir = parse_pair_i64(&line, "--line")?;
            let k = parse_pair_f64(&k, "--k")?;
            let times = parse_list_f64(&times, "--times")?;
            let geom = geometry_by_name(&geometry, size)?;
            let center_site = (size / 2) as f64;
            let anchor = match anchor {
                Some(a) => {
                    let p = parse_pair_i64(&a, "--anchor")?;
                    (p.0 as i32, p.1 as i32)
                }
                None => (center_site as i32, center_site as i32),
            };
            let r0 = match center {
                Some(c) => parse_pair_f64(&c, "--center")?,
                None => [center_site - 6.0, center_site],
            };
            run.record("line", &line);
            run.record("lambda", io::fmt_f64(lambda));
            run.record("anchor", format!("{},{}", anchor.0, anchor.1));
            run.record("center", format!("{},{}", io::fmt_f64(r0[0]), io::fmt_f64(r0[1])));
            run.record("sigma", io::fmt_f64(sigma));
            run.record("k", format!("{},{}", io::fmt_f64(k[0]), io::fmt_f64(k[1])));
            run.record("geometry", &geometry);
            run.record("size", size);
            run.record("strip", strip);
            run.record("renormalize", !no_renormalize);

            let pot = line_potential(&geom, dir, anchor, Complex64::new(lambda, 0.0));
            let op = real_space_operator(&run.model, &geom, Some(&pot))?;
            // clamp dt to the stability bound
            let bound = 0.95 * nhlattice::dynamics::RK4_STABILITY / op.norm_one().max(1e-300);
            let dt_used = dt.min(bound);
            let t_final = times.iter().cloned().fold(0.0_f64, f64::max);
            let n_steps = (t_final / dt_used).ceil() as usize;
            run.record("dt", io::fmt_f64(dt_used));
            run.record("n_steps", n_steps);

            let spinor = vec![Complex64::new(1.0, 0.0); run.model.dim()];
            let psi0 = gaussian_packet(&geom, r0, sigma, k, &spinor)?;
            let traj = evolve(
                &op,
                &geom,
                run.model.dim(),
                &psi0,
                dt_used,
                n_steps,
                &times,
                !no_renormalize,
            )?;
            for (i, snap) in traj.snapshots.iter().enumerate() {
                let name = format!("snapshot-t{:.1}.csv", snap.time);
                run.write(&name, &io::snapshot_csv(&traj, i))?;
                run.write(
                    &format!("snapshot-t{:.1}.gp", snap.time),
                    &io::lattice_heatmap_script(&name, &format!("density at t = {:.1}", snap.time)),
                )?;
            }
            let frame = LatticeFrame::new(dir)?;
            let weights = region_weights(&traj, &line_partition(frame, anchor, strip));
            let snap_times: Vec<f64> = traj.snapshots.iter().map(|s| s.time).collect();
            run.write("weights.csv", &io::weights_csv(&snap_times, &weights))?;
            println!(
                "wrote {} snapshots and weights.csv to {}",
                traj.snapshots.len(),
                run.out_dir.display()
            );
            run.finish("wavepacket")
        }

        Command::Obc { common, geometry, size, omega, delta, edge_width, cap } => {
            let mut run = Run::new(&common, "obc")?;
            let geom = geometry_by_name(&geometry, size)?;
            run.record("geometry", &geometry);
            run.record("size", size);
            run.record("sites", geom.len());
            let spec = obc_spectrum(&run.model, &geom, cap)?;
            run.write("spectrum.csv", &io::spectrum_csv(&spec))?;
            run.write(
                "spectrum.gp",
                &io::spectrum_plot_script(
                    "spectrum.csv",
                    &format!("open-boundary spectrum, {geometry} {size}"),
                ),
            )?;
            run.write("geometry.csv", &geom.to_csv())?;
            if let Some(omega) = omega {
                run.record("omega", io::fmt_f64(omega));
                run.record("delta", io::fmt_f64(delta));
                run.record("edge_width", edge_width);
                let field = frequency_density(&spec, omega, delta)?;
                run.write("density.csv", &io::density_csv(&field, &geom))?;
                run.write(
                    "density.gp",
                    &io::lattice_heatmap_script(
                        "density.csv",
                        &format!("P_omega(r), omega = {omega}"),
                    ),
                )?;
                let metrics = localization_metrics(&field, &geom, edge_width);
                let line = io::metrics_line(omega, &metrics);
                run.write("metrics.txt", &line)?;
                print!("{line}");
            } else {
                println!("wrote spectrum.csv ({} eigenvalues)", spec.eigenvalues.len());
            }
            run.finish("obc")
        }

        Command::Symmetry { common, grid, tol } => {
            let mut run = Run::new(&common, "symmetry")?;
            run.record("grid", grid);
            run.record("tol", io::fmt_f64(tol));
            let syms = run.model.detected_symmetries(grid, tol)?;
            let names: Vec<&str> = syms.iter().map(|s| s.name()).collect();
            println!(
                "band symmetries: {}",
                if names.is_empty() { "none".to_string() } else { names.join(", ") }
            );
            let dirs = symmetry_protected_directions(&run.model, grid, tol)?;
            if dirs.is_empty() {
                println!("no symmetry-protected line directions");
            }
            for d in &dirs {
                println!(
                    "direction ({},{}) conventional for all incident momenta (protected by {}{})",
                    d.direction.0,
                    d.direction.1,
                    d.symmetry.name(),
                    if d.composite_with_reciprocity {
                        ", reciprocity composite valid"
                    } else {
                        ""
                    }
                );
            }
            run.finish("symmetry")
        }
    }
}
