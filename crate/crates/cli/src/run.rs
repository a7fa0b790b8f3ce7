use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use qpm_core::ensemble::{lorentzian, ChannelWeights, EvolutionRecord};
use qpm_core::multiatom::{Couplings, GroupBasis, GroupConfig};
use qpm_core::twolevel::{
    bloch_trajectory, dephasing_phase_spread, qpm_sequence, write_bloch_csv, PulseSequence,
};
use qpm_core::{
    ensemble_scan, group_scan, lineshape, ordered_scan, percentile_coupling, Density,
    EnsembleConfig, OrderedConfig, Protocol, C64,
};

use crate::config::{
    linear_range_warning, BlochParams, DetuningUnit, ExperimentConfig, ExperimentKind,
    GroupsParams, LineshapeParams, OrderedParams, PairScanParams,
};
use crate::output::{commit, Artifact};
use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `output_dir` from the config.
    pub out_dir: Option<PathBuf>,
    /// Size of a dedicated thread pool; the global pool when unset.
    pub workers: Option<usize>,
    /// Progress on stderr plus per-group geometry dumps.
    pub verbose: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub name: String,
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub workers: usize,
    pub wall_time_s: f64,
    pub created_unix_s: u64,
    pub output_dir: PathBuf,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    hash: String,
    verbose: bool,
    files: Vec<Artifact>,
    /// Remarks that depend on computed quantities.
    warnings: Vec<String>,
}

impl Ctx<'_> {
    fn header(&self) -> Vec<(String, String)> {
        vec![
            ("experiment".into(), self.cfg.name.clone()),
            (
                "experiment_kind".into(),
                self.cfg.experiment.as_str().into(),
            ),
            ("experiment_config_hash".into(), self.hash.clone()),
            ("qpm_cli_version".into(), env!("CARGO_PKG_VERSION").into()),
        ]
    }

    fn progress(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("[{}] {}", self.cfg.name, msg.as_ref());
        }
    }

    fn push(&mut self, suffix: &str, bytes: Vec<u8>) {
        self.files.push(Artifact {
            name: format!("{}_{suffix}", self.cfg.name),
            bytes,
        });
    }

    fn push_record(
        &mut self,
        rec: &EvolutionRecord,
        suffix: &str,
        extra: &[(String, String)],
    ) -> Result<(), CliError> {
        let mut header = self.header();
        header.extend_from_slice(extra);
        let mut buf = Vec::new();
        rec.write_csv(&mut buf, &header)?;
        self.push(suffix, buf);
        Ok(())
    }
}

fn channel_weights(w: Option<[f64; 4]>) -> Result<ChannelWeights, CliError> {
    Ok(w.map(ChannelWeights::new).transpose()?.unwrap_or_default())
}

fn cell(v: qpm_core::Result<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per curve with the scalar figures of merit. Cells are empty where
/// a measure does not apply (e.g. fewer than two extrema).
#[derive(Default)]
struct Summary {
    rows: Vec<[String; 6]>,
}

impl Summary {
    fn add(&mut self, model: &str, label: &str, rec: &EvolutionRecord) {
        self.rows.push([
            model.into(),
            label.into(),
            cell(rec.dephasing_time()),
            cell(rec.oscillation_period()),
            cell(rec.rabi_cycles_before_dephasing()),
            cell(rec.modulation_contrast()),
        ]);
    }

    fn into_csv(self, header: &[(String, String)]) -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        write_comments(&mut buf, header);
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record([
            "model",
            "protocol",
            "dephasing_time_us",
            "oscillation_period_us",
            "rabi_cycles_before_dephasing",
            "modulation_contrast",
        ])
        .map_err(csv_err)?;
        for r in self.rows {
            w.write_record(&r).map_err(csv_err)?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        drop(w);
        Ok(buf)
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn write_comments(buf: &mut Vec<u8>, pairs: &[(String, String)]) {
    for (k, v) in pairs {
        buf.extend_from_slice(format!("# {k}: {v}\n").as_bytes());
    }
}

fn run_lineshape(ctx: &mut Ctx, p: &LineshapeParams) -> Result<(), CliError> {
    let ens = EnsembleConfig {
        rho: Density::per_cm3(p.rho)?,
        n_samples: p.samples,
        seed: ctx.cfg.seed,
        channel_weights: channel_weights(p.channel_weights)?,
    };
    let detunings = p.detunings.values();
    ctx.progress(format!(
        "lineshape: {} pairs x {} detunings",
        p.samples,
        detunings.len()
    ));
    let ls = lineshape(&ens, p.duration, &detunings)?;
    let mut pcts = Vec::with_capacity(p.percentiles.len());
    for &q in &p.percentiles {
        pcts.push((q, percentile_coupling(&ens, q)?));
    }

    let mut header = ctx.header();
    header.push(("hwhm_mhz".into(), cell(ls.hwhm())));
    for &(q, v) in &pcts {
        header.push((format!("coupling_p{q}_mhz"), v.to_string()));
    }
    let mut buf = Vec::new();
    ls.write_csv(&mut buf, &header)?;
    ctx.push("lineshape.csv", buf);

    let mut buf = Vec::new();
    write_comments(&mut buf, &header);
    let mut w = csv::Writer::from_writer(&mut buf);
    let mut cols = vec!["detuning_mhz".to_string()];
    cols.extend(pcts.iter().map(|(q, _)| format!("lorentzian_p{q}")));
    w.write_record(&cols).map_err(csv_err)?;
    for &e in &detunings {
        let mut row = vec![e.to_string()];
        row.extend(pcts.iter().map(|&(_, v)| lorentzian(v, e).to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    drop(w);
    ctx.push("lorentzians.csv", buf);
    Ok(())
}

fn run_pair_scan(ctx: &mut Ctx, p: &PairScanParams) -> Result<(), CliError> {
    let ens = EnsembleConfig {
        rho: Density::per_cm3(p.rho)?,
        n_samples: p.samples,
        seed: ctx.cfg.seed,
        channel_weights: channel_weights(p.channel_weights)?,
    };
    let times = p.times.values();
    let mut summary = Summary::default();
    for proto in &p.protocols {
        let label = proto.label();
        ctx.progress(format!(
            "2-atom {label}: {} pairs x {} times",
            p.samples,
            times.len()
        ));
        let rec = ensemble_scan(&ens, proto, &times)?;
        ctx.push_record(&rec, &format!("2-atom_{label}.csv"), &[])?;
        summary.add("2-atom", &label, &rec);
    }
    let csv = summary.into_csv(&ctx.header())?;
    ctx.push("summary.csv", csv);
    Ok(())
}

fn scaled(proto: &Protocol, factor: f64) -> Protocol {
    match *proto {
        Protocol::Constant { detuning } => Protocol::Constant {
            detuning: detuning * factor,
        },
        Protocol::Qpm { detuning, zones } => Protocol::Qpm {
            detuning: detuning * factor,
            zones,
        },
    }
}

fn run_ordered(ctx: &mut Ctx, p: &OrderedParams) -> Result<(), CliError> {
    let ord = OrderedConfig {
        r_mean: p.r_mean,
        r_sigma: p.r_sigma,
        theta: p.theta_deg.to_radians(),
        n_samples: p.samples,
        seed: ctx.cfg.seed,
        channel_weights: channel_weights(p.channel_weights)?,
    };
    let v_avg = ord.mean_coupling()?;
    ctx.progress(format!("ordered array: mean |V| = {v_avg:.4} MHz"));
    let times = p.times.values();
    let mut summary = Summary::default();
    for proto in &p.protocols {
        let (run, label) = match p.detuning_unit {
            DetuningUnit::Mhz => (*proto, proto.label()),
            DetuningUnit::VAvg => (scaled(proto, v_avg), proto.label().replace("MHz", "Vavg")),
        };
        ctx.progress(format!(
            "ordered {label}: {} pairs x {} times",
            p.samples,
            times.len()
        ));
        if let Some(w) = linear_range_warning(&format!("protocol {label}"), run.detuning()) {
            ctx.warnings.push(w);
        }
        let rec = ordered_scan(&ord, &run, &times)?;
        let extra = [
            ("mean_coupling_mhz".to_string(), v_avg.to_string()),
            ("detuning_mhz".to_string(), run.detuning().to_string()),
        ];
        ctx.push_record(&rec, &format!("ordered_{label}.csv"), &extra)?;
        summary.add("ordered", &label, &rec);
    }
    let mut header = ctx.header();
    header.push(("mean_coupling_mhz".into(), v_avg.to_string()));
    let csv = summary.into_csv(&header)?;
    ctx.push("summary.csv", csv);
    Ok(())
}

fn group_dump(cfg: &GroupConfig) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    let mut w = csv::Writer::from_writer(&mut buf);
    w.write_record([
        "group",
        "atom",
        "x_um",
        "y_um",
        "z_um",
        "mj_positive",
        "basis_size",
    ])
    .map_err(csv_err)?;
    for g in 0..cfg.n_groups {
        let group = cfg.group(g)?;
        let dim = GroupBasis::enumerate(group.len()).len();
        for (a, (pos, up)) in group
            .positions()
            .iter()
            .zip(group.mj_positive())
            .enumerate()
        {
            w.write_record([
                g.to_string(),
                a.to_string(),
                pos[0].to_string(),
                pos[1].to_string(),
                pos[2].to_string(),
                up.to_string(),
                dim.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    drop(w);
    Ok(buf)
}

fn run_groups(ctx: &mut Ctx, p: &GroupsParams) -> Result<(), CliError> {
    let rho = Density::per_cm3(p.rho)?;
    let cfg = GroupConfig {
        rho,
        n_groups: p.groups,
        seed: ctx.cfg.seed,
        atoms: p.atoms,
        couplings: Couplings {
            resonant: true,
            exchange: p.exchange,
        },
    };
    let times = p.times.values();
    let model = format!("{}-atom", p.atoms);
    let mut summary = Summary::default();
    for proto in &p.protocols {
        let label = proto.label();
        ctx.progress(format!(
            "{model} {label}: {} groups x {} times",
            p.groups,
            times.len()
        ));
        let rec = group_scan(&cfg, proto, &times)?;
        ctx.push_record(&rec, &format!("{model}_{label}.csv"), &[])?;
        summary.add(&model, &label, &rec);
    }
    if let Some(n) = p.two_atom_samples {
        let ens = EnsembleConfig {
            rho,
            n_samples: n,
            seed: ctx.cfg.seed,
            channel_weights: ChannelWeights::UNIFORM,
        };
        for proto in &p.protocols {
            let label = proto.label();
            ctx.progress(format!("2-atom {label}: {n} pairs x {} times", times.len()));
            let rec = ensemble_scan(&ens, proto, &times)?;
            ctx.push_record(&rec, &format!("2-atom_{label}.csv"), &[])?;
            summary.add("2-atom", &label, &rec);
        }
    }
    let csv = summary.into_csv(&ctx.header())?;
    ctx.push("summary.csv", csv);
    if ctx.verbose {
        let dump = group_dump(&cfg)?;
        ctx.push("groups.csv", dump);
    }
    Ok(())
}

fn run_bloch(ctx: &mut Ctx, p: &BlochParams) -> Result<(), CliError> {
    let seq = if p.zones == 1 {
        PulseSequence::constant(p.detuning, p.zone_duration)?
    } else {
        qpm_sequence(p.detuning, p.zone_duration * p.zones as f64, p.zones)?
    };
    let couplings: Vec<C64> = p.couplings.iter().map(|&v| C64::new(v, 0.0)).collect();
    for (&v, &c) in p.couplings.iter().zip(&couplings) {
        ctx.progress(format!("bloch trajectory V = {v} MHz"));
        let points = bloch_trajectory(&seq, c, p.dt)?;
        let mut header = ctx.header();
        header.push(("coupling_mhz".into(), v.to_string()));
        header.push(("detuning_mhz".into(), p.detuning.to_string()));
        header.push(("zones".into(), p.zones.to_string()));
        let mut buf = Vec::new();
        write_bloch_csv(&points, &header, &mut buf)?;
        ctx.push(&format!("bloch_V{v}.csv"), buf);
    }
    if couplings.len() >= 2 {
        let spread = dephasing_phase_spread(&seq, &couplings)?;
        let mut buf = Vec::new();
        write_comments(&mut buf, &ctx.header());
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["time_us", "phase_spread_rad"])
            .map_err(csv_err)?;
        for (t, s) in spread {
            w.write_record([t.to_string(), s.to_string()])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        drop(w);
        ctx.push("phase_spread.csv", buf);
    }
    Ok(())
}

fn compute(ctx: &mut Ctx) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let missing =
        || CliError::Validation(vec![format!("missing [{}] table", cfg.experiment.as_str())]);
    match cfg.experiment {
        ExperimentKind::Lineshape => {
            run_lineshape(ctx, cfg.lineshape.as_ref().ok_or_else(missing)?)
        }
        ExperimentKind::Rabi => run_pair_scan(ctx, cfg.rabi.as_ref().ok_or_else(missing)?),
        ExperimentKind::Qpm => run_pair_scan(ctx, cfg.qpm.as_ref().ok_or_else(missing)?),
        ExperimentKind::Ordered => run_ordered(ctx, cfg.ordered.as_ref().ok_or_else(missing)?),
        ExperimentKind::Groups => run_groups(ctx, cfg.groups.as_ref().ok_or_else(missing)?),
        ExperimentKind::Bloch => run_bloch(ctx, cfg.bloch.as_ref().ok_or_else(missing)?),
    }
}

/// Validate, simulate, then write every output plus `<name>_manifest.json`.
/// Outputs are only written once the whole experiment has succeeded.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Manifest, CliError> {
    cfg.validate()?;
    if opts.workers == Some(0) {
        return Err(CliError::Validation(vec![
            "--workers: must be at least 1".into()
        ]));
    }
    let started = Instant::now();
    let mut ctx = Ctx {
        cfg,
        hash: cfg.hash(),
        verbose: opts.verbose,
        files: Vec::new(),
        warnings: Vec::new(),
    };
    let workers = match opts.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
            pool.install(|| compute(&mut ctx))?;
            n
        }
        None => {
            compute(&mut ctx)?;
            rayon::current_num_threads()
        }
    };

    let dir = opts
        .out_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    let mut files = ctx.files;
    let mut warnings = cfg.warnings();
    warnings.extend(ctx.warnings);
    let manifest = Manifest {
        name: cfg.name.clone(),
        experiment: cfg.experiment.as_str().into(),
        config_hash: ctx.hash,
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        workers,
        wall_time_s: started.elapsed().as_secs_f64(),
        created_unix_s: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        output_dir: dir.clone(),
        outputs: files.iter().map(|f| f.name.clone()).collect(),
        warnings,
    };
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
    files.push(Artifact {
        name: format!("{}_manifest.json", cfg.name),
        bytes: json,
    });
    commit(&dir, &files)?;
    Ok(manifest)
}
