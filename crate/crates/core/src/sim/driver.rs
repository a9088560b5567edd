use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::{self, StateSidecar};
use crate::kinetics::{compute_velocities, BoundaryProps, KineticsInput, Velocities};
use crate::mesh::{Mesh, NodeId, SurfaceId};
use crate::microgen::{self, next_surface_id, Preset};
use crate::oracles::{self, OracleCurve};
use crate::par::ExecPolicy;
use crate::remesh::pass::{cleanup_junction_nodes, remesh_pass, PassContext, PassReport};
use crate::remesh::{advance_nodes, EventLog};
use crate::rex::{
    critical_density, critical_perimeter, energy_field, harden, homogenize_growth, interp_params, nucleation_step,
    nucleus_radius, recover, step_rng, CriticalDensityInput, GrainState, Grains, InsertedNucleus, NucleationBudget,
    NucleationContext, StrainAccumulators,
};
use crate::topology::{self, surface_areas};

use super::config::{RunConfig, Segment};
use super::stats::{size_histogram, write_histogram, StatsRow, STATS_HEADER};

/// Junction-split nodes closer than this fraction of h to their origin are merged back.
pub const JUNCTION_CLEANUP_FRACTION: f64 = 1e-3;
/// Fraction of h the fastest node may travel in one step when the guard is on.
pub const DT_GUARD: f64 = 0.25;
/// Steps shorter than this fraction of dt are absorbed into the previous one.
const TIME_SNAP: f64 = 1e-9;

/// Complete simulation state.
#[derive(Clone, Debug)]
pub struct State {
    pub mesh: Mesh,
    pub grains: Grains,
    pub time: f64,
    pub step: u64,
    pub next_surface: u32,
    pub strain: StrainAccumulators,
    pub budget: NucleationBudget,
    pub velocities: Option<Velocities>,
    pub dirty: Option<Vec<NodeId>>,
    pub junction_nodes: Vec<(NodeId, NodeId)>,
    pub rho_c: Option<f64>,
    pub pc: f64,
    pub events: EventLog,
}

impl State {
    pub fn new(mesh: Mesh, grains: Grains) -> Self {
        let next_surface = next_surface_id(&grains).0;
        State {
            mesh,
            grains,
            time: 0.0,
            step: 0,
            next_surface,
            strain: StrainAccumulators::default(),
            budget: NucleationBudget::default(),
            velocities: None,
            dirty: None,
            junction_nodes: Vec::new(),
            rho_c: None,
            pc: 0.0,
            events: EventLog::default(),
        }
    }

    pub fn sidecar(&self) -> StateSidecar {
        StateSidecar {
            time: self.time,
            step: self.step,
            next_surface: self.next_surface,
            node_capacity: self.mesh.node_capacity(),
            element_capacity: self.mesh.element_capacity(),
            grains: self.grains.iter().map(|(s, g)| (s.0, *g)).collect(),
            strain: self.strain,
            budget: self.budget,
            velocities: self
                .velocities
                .as_ref()
                .map(|v| {
                    v.v.iter()
                        .enumerate()
                        .filter(|(_, x)| x.x != 0.0 || x.y != 0.0)
                        .map(|(i, x)| (i as u32, x.x, x.y))
                        .collect()
                })
                .unwrap_or_default(),
            dirty: self.dirty.as_ref().map(|d| d.iter().map(|n| n.0).collect()),
            junction_nodes: self.junction_nodes.iter().map(|(a, b)| (a.0, b.0)).collect(),
            rho_c: self.rho_c,
            pc: self.pc,
        }
    }

    /// Rebuild a state from a snapshot and its sidecar.
    pub fn from_snapshot(snap: io::Snapshot, side: &StateSidecar) -> Self {
        let mut mesh = snap.mesh;
        mesh.reserve_ids(side.node_capacity, side.element_capacity);
        let had_velocities = side.dirty.is_some();
        State {
            grains: side.grains(),
            time: side.time,
            step: side.step,
            next_surface: side.next_surface,
            strain: side.strain,
            budget: side.budget,
            velocities: had_velocities.then(|| side.velocities(mesh.node_capacity())),
            dirty: side.dirty(),
            junction_nodes: side.junction_nodes.iter().map(|&(a, b)| (NodeId(a), NodeId(b))).collect(),
            rho_c: side.rho_c,
            pc: side.pc,
            events: EventLog::default(),
            mesh,
        }
    }

    /// Read `path` and the sidecar next to it.
    pub fn load(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let snap = io::read_vtk(f, &path.display().to_string())?;
        let side = StateSidecar::read(&io::sidecar_path(path))?;
        Ok(Self::from_snapshot(snap, &side))
    }

    /// Write the snapshot and its sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = io::create(path)?;
        io::write_vtk(&mut w, &self.mesh, &self.grains, self.time, self.velocities.as_ref())?;
        std::io::Write::flush(&mut w)?;
        self.sidecar().write(&io::sidecar_path(path))
    }

    pub fn stats(&self) -> StatsRow {
        StatsRow::compute(self.time, &self.mesh, &self.grains, self.pc)
    }

    /// Area of surface `s`.
    pub fn area_of(&self, s: SurfaceId) -> f64 {
        self.mesh.elements().filter(|(_, e)| e.surface == s).map(|(id, _)| self.mesh.signed_area(id)).sum()
    }
}

#[derive(Clone, Debug, Default)]
pub struct StepReport {
    pub dt: f64,
    pub clamped: bool,
    pub frozen: usize,
    pub remesh: PassReport,
    pub nuclei: Vec<InsertedNucleus>,
}

/// Surface tracked against an analytic reference.
#[derive(Clone, Debug)]
pub struct OracleTrack {
    pub surface: SurfaceId,
    pub reference: OracleCurve,
    /// Multiplier from simulated time to the reference's dimensionless time.
    pub time_scale: f64,
    pub samples: Vec<(f64, f64)>,
}

impl OracleTrack {
    pub fn reference_at(&self, t: f64) -> Option<f64> {
        self.reference.at(t * self.time_scale)
    }

    pub fn max_l2(&self) -> f64 {
        oracles::max_l2_error(&self.samples, |t| self.reference_at(t))
    }
}

/// A nucleus inserted during the run with the critical density it was sized for.
#[derive(Clone, Debug, PartialEq)]
pub struct NucleusRecord {
    pub time: f64,
    pub rho_c: f64,
    pub nucleus: InsertedNucleus,
}

pub struct Simulation {
    pub cfg: RunConfig,
    pub state: State,
    pub policy: ExecPolicy,
    /// Every nucleus inserted so far.
    pub nuclei: Vec<NucleusRecord>,
    pub oracle: Option<OracleTrack>,
}

impl Simulation {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        let state = match (&cfg.generator, &cfg.restart) {
            (Some(spec), _) => {
                let g = microgen::generate(spec)?;
                State::new(g.mesh, g.grains)
            }
            (None, Some(path)) => State::load(path)?,
            (None, None) => return Err(Error::Config("no generator and no restart snapshot".into())),
        };
        let mut sim = Simulation { cfg, state, policy: ExecPolicy::default(), nuclei: Vec::new(), oracle: None };
        sim.oracle = oracle_track(&sim.cfg);
        Ok(sim)
    }

    pub fn with_policy(mut self, policy: ExecPolicy) -> Self {
        self.policy = policy;
        self
    }

    fn segment(&self) -> (&Segment, f64) {
        let (i, end) = self.cfg.schedule.segment_at(self.state.time);
        (&self.cfg.schedule.segments[i], end)
    }

    pub fn props(&self, seg: &Segment) -> BoundaryProps {
        self.cfg.props(seg)
    }

    pub fn tau(&self) -> f64 {
        self.cfg.tau()
    }

    fn record_oracle(&mut self) {
        if let Some(o) = &mut self.oracle {
            let s = self.state.area_of(o.surface);
            o.samples.push((self.state.time, s));
        }
    }

    fn settle_remesh(&mut self, rep: &PassReport) {
        let st = &mut self.state;
        if !rep.grain_splits.is_empty() {
            let areas = surface_areas(&st.mesh);
            // in creation order, so a child that splits again finds its state
            for (parent, child) in &rep.grain_splits {
                if let Some(mut g) = st.grains.get(parent).copied() {
                    g.prev_area = areas.get(child).copied().unwrap_or(0.0);
                    st.grains.insert(*child, g);
                    if let Some(pg) = st.grains.get_mut(parent) {
                        pg.prev_area = areas.get(parent).copied().unwrap_or(pg.prev_area);
                    }
                }
            }
        }
        for s in &rep.vanished {
            st.grains.remove(s);
        }
    }

    /// One time step of at most `dt_max`.
    pub fn step(&mut self, dt_max: f64) -> Result<StepReport> {
        let (seg, seg_end) = self.segment();
        let seg = seg.clone();
        let props = self.props(&seg);
        let tau = self.tau();
        let rcfg = self.cfg.remesh.clone();
        let floor = rcfg.area_floor();
        let energy = energy_field(&self.state.grains, tau);
        let mut report = StepReport::default();

        // remeshing and junction decomposition
        {
            let st = &mut self.state;
            let mut ctx = PassContext {
                time: st.time,
                events: &mut st.events,
                next_surface: &mut st.next_surface,
                velocities: st.velocities.as_ref(),
                energy: &energy,
                gamma: props.gamma,
            };
            let mut rep = remesh_pass(&mut st.mesh, &rcfg, &mut ctx, st.dirty.as_deref());
            st.junction_nodes.extend(rep.junction_nodes.iter().copied());
            let before = (rep.vanished.len(), rep.grain_splits.len());
            let cleanup = cleanup_junction_nodes(
                &mut st.mesh,
                &rcfg,
                &mut ctx,
                &mut st.junction_nodes,
                JUNCTION_CLEANUP_FRACTION,
            );
            rep.vanished.extend(cleanup.vanished);
            rep.grain_splits.extend(cleanup.grain_splits);
            rep.collapses += cleanup.collapses;
            debug_assert!(rep.vanished.len() >= before.0 && rep.grain_splits.len() >= before.1);
            report.remesh = rep;
        }
        let rep = report.remesh.clone();
        self.settle_remesh(&rep);

        // kinetics
        let st = &mut self.state;
        let topo = topology::build(&st.mesh)?;
        let mut dt = self.cfg.schedule.dt.min(dt_max).min(seg_end - st.time);
        let input = KineticsInput {
            props: &props,
            field: &energy,
            capillarity: self.cfg.schedule.capillarity,
            implicit_dt: if self.cfg.schedule.implicit_capillarity { dt } else { 0.0 },
        };
        let vel = compute_velocities(&st.mesh, &topo, &input, self.policy)?;

        // step length
        let vmax = vel.max_speed();
        if self.cfg.schedule.dt_guard && vmax > 0.0 {
            let guard = DT_GUARD * rcfg.h / vmax;
            if guard < dt {
                log::info!("t = {:e}: dt clamped from {dt:e} to {guard:e}", st.time);
                dt = guard;
                report.clamped = true;
            }
        }
        if !(dt > 0.0) {
            return Err(Error::Invariant(format!("non-positive time step at t = {}", st.time)));
        }

        // motion
        let adv = advance_nodes(&mut st.mesh, &vel, dt, floor);
        report.frozen = adv.frozen.len();
        let mut dirty: BTreeSet<NodeId> = adv.moved.iter().copied().collect();
        dirty.extend(adv.frozen.iter().copied());
        st.time =
            if (seg_end - (st.time + dt)).abs() <= TIME_SNAP * self.cfg.schedule.dt { seg_end } else { st.time + dt };
        st.step += 1;
        st.velocities = Some(vel);
        report.dt = dt;

        if self.cfg.schedule.rex {
            let nuclei = self.rex_update(&seg, &props, tau, dt)?;
            for n in &nuclei {
                for &e in self
                    .state
                    .mesh
                    .elements()
                    .filter(|(_, e)| e.surface == n.surface)
                    .map(|(id, _)| id)
                    .collect::<Vec<_>>()
                    .iter()
                {
                    dirty.extend(self.state.mesh.element(e).nodes);
                }
            }
            report.nuclei = nuclei;
        }
        self.state.dirty = Some(dirty.into_iter().collect());
        self.record_oracle();
        Ok(report)
    }

    /// Dislocation-density update, critical density and nucleation after a step of `dt`.
    fn rex_update(&mut self, seg: &Segment, props: &BoundaryProps, tau: f64, dt: f64) -> Result<Vec<InsertedNucleus>> {
        let m = self.cfg.material.clone().expect("validated: rex needs a material");
        let st = &mut self.state;
        let rate = seg.rate;
        st.strain.advance(rate, dt);
        let areas = surface_areas(&st.mesh);
        let row = interp_params(rate, &m.table);
        let d_eps = rate * dt;
        for (s, g) in st.grains.iter_mut() {
            if rate > 0.0 {
                g.rho = harden(g.rho, d_eps, row.k1, row.k2)?;
            }
            let area = areas.get(s).copied().unwrap_or(0.0);
            let ds = area - g.prev_area;
            if ds > 0.0 && g.prev_area > 0.0 {
                g.rho = homogenize_growth(g.rho, g.prev_area, ds, m.rho0);
            }
            g.prev_area = area;
            if rate == 0.0 {
                g.rho = recover(g.rho, dt, m.ks, m.rho0);
            }
        }

        let eff = if rate > 0.0 { Ok(rate) } else { st.strain.apparent_rate() };
        let Ok(eff) = eff else {
            st.rho_c = None;
            st.pc = 0.0;
            return Ok(Vec::new());
        };
        let p = interp_params(eff, &m.table);
        let rho_c = critical_density(&CriticalDensityInput {
            b_dim: m.b_dim,
            gamma: props.gamma,
            rate: eff,
            k1: p.k1,
            k2: p.k2,
            mobility: props.mobility,
            delta: props.delta,
            tau,
            convergence: m.convergence,
        })?;
        st.rho_c = Some(rho_c);
        st.pc = critical_perimeter(&st.mesh, &st.grains, rho_c);
        st.budget.accrue(p.kg, st.pc, dt);
        let Ok(r) = nucleus_radius(rho_c, m.rho0, props.gamma, tau, m.omega) else {
            return Ok(Vec::new());
        };
        let mut rng = step_rng(self.cfg.seed, st.step);
        let mut ctx = NucleationContext {
            time: st.time,
            rho0: m.rho0,
            events: &mut st.events,
            next_surface: &mut st.next_surface,
            floor: self.cfg.remesh.area_floor(),
        };
        let nuclei = nucleation_step(&mut st.mesh, &mut st.grains, &mut st.budget, rho_c, r, &mut rng, &mut ctx);
        for n in &nuclei {
            self.nuclei.push(NucleusRecord { time: st.time, rho_c, nucleus: n.clone() });
        }
        Ok(nuclei)
    }

    /// Step until `t_end`, landing exactly on it. `each` sees the state after every step.
    pub fn advance_to(&mut self, t_end: f64, mut each: impl FnMut(&State, &StepReport)) -> Result<()> {
        if self.oracle.as_ref().is_some_and(|o| o.samples.is_empty()) {
            self.record_oracle();
        }
        while self.state.time < t_end * (1.0 - 1e-12) {
            let remaining = t_end - self.state.time;
            let dt_max = if remaining <= self.cfg.schedule.dt * (1.0 + TIME_SNAP) { remaining } else { f64::INFINITY };
            let rep = self.step(dt_max)?;
            if (t_end - self.state.time).abs() <= TIME_SNAP * self.cfg.schedule.dt {
                self.state.time = t_end;
            }
            each(&self.state, &rep);
        }
        Ok(())
    }

    /// Validate mesh and topology; the error names the first violations.
    pub fn check(&self) -> Result<()> {
        let topo = topology::build(&self.state.mesh)?;
        topology::validate(&self.state.mesh, &topo).into_result()?;
        let missing: Vec<u32> = self
            .state
            .mesh
            .surface_ids()
            .into_iter()
            .filter(|s| !self.state.grains.contains_key(s))
            .map(|s| s.0)
            .collect();
        if !missing.is_empty() {
            return Err(Error::Invariant(format!("surfaces without grain state: {missing:?}")));
        }
        Ok(())
    }

    /// Full batch run with file output. Stops at `until` (or the schedule end).
    pub fn run(&mut self, until: Option<f64>) -> Result<RunSummary> {
        let out = self.cfg.output.dir.clone();
        std::fs::create_dir_all(&out)?;
        let end = until.map_or(self.cfg.schedule.total(), |u| u.min(self.cfg.schedule.total()));
        let stats_every = self.cfg.output.stats_every;
        let snap_every = self.cfg.output.snapshot_every;

        let mut stats = io::create(&out.join("stats.csv"))?;
        {
            use std::io::Write;
            writeln!(stats, "{STATS_HEADER}")?;
        }
        let mut summary = RunSummary::default();
        self.check().map_err(as_invariant)?;
        self.state.stats().write(&mut stats)?;
        summary.rows.push(self.state.stats());
        let mut last_valid = self.state.clone();
        if snap_every.is_some() {
            self.write_snapshot(&out)?;
        }

        let next_after = |t: f64, every: f64| ((t / every) * (1.0 + 1e-12)).floor() * every + every;
        loop {
            let t = self.state.time;
            if t >= end * (1.0 - 1e-12) {
                break;
            }
            let mut target = next_after(t, stats_every).min(end);
            if let Some(se) = snap_every {
                target = target.min(next_after(t, se));
            }
            if let Err(e) = self.advance_to(target, |_, _| {}) {
                self.persist_failure(&out, &last_valid)?;
                return Err(e);
            }
            if let Err(e) = self.check() {
                self.persist_failure(&out, &last_valid)?;
                return Err(as_invariant(e));
            }
            last_valid = self.state.clone();
            let t = self.state.time;
            let on_stats = is_multiple(t, stats_every) || t >= end * (1.0 - 1e-12);
            if on_stats {
                let row = self.state.stats();
                row.write(&mut stats)?;
                summary.rows.push(row);
            }
            if snap_every.is_some_and(|se| is_multiple(t, se)) {
                self.write_snapshot(&out)?;
            }
        }
        {
            use std::io::Write;
            stats.flush()?;
        }
        let final_path = out.join("final.vtk");
        self.state.save(&final_path)?;
        summary.snapshots.push(final_path);
        self.write_events(&out)?;
        io::write_grains_csv(io::create(&out.join("grains.csv"))?, &self.state.mesh, &self.state.grains)?;
        if let Some(bin) = self.cfg.output.histogram_bin {
            write_histogram(
                io::create(&out.join("histogram_final.csv"))?,
                &size_histogram(&self.state.mesh, bin),
                bin,
            )?;
        }
        if let Some(o) = &self.oracle {
            self.write_oracle(&out, o)?;
            summary.oracle_l2 = Some(o.max_l2());
        }
        Ok(summary)
    }

    fn write_snapshot(&self, out: &Path) -> Result<()> {
        let path = out.join(format!("snapshot_{:08}.vtk", self.state.step));
        self.state.save(&path)?;
        if let Some(bin) = self.cfg.output.histogram_bin {
            let h = size_histogram(&self.state.mesh, bin);
            write_histogram(io::create(&out.join(format!("histogram_{:08}.csv", self.state.step)))?, &h, bin)?;
        }
        Ok(())
    }

    fn write_events(&self, out: &Path) -> Result<()> {
        let mut w = io::create(&out.join("events.csv"))?;
        self.state.events.write_csv(&mut w, true)?;
        std::io::Write::flush(&mut w)?;
        Ok(())
    }

    fn write_oracle(&self, out: &Path, o: &OracleTrack) -> Result<()> {
        use std::io::Write;
        let mut w = io::create(&out.join("oracle_compare.csv"))?;
        writeln!(w, "t,surface,reference,l2_error")?;
        let l2 = oracles::l2_error_series(&o.samples, |t| o.reference_at(t));
        for (&(t, s), &(_, e)) in o.samples.iter().zip(&l2) {
            let r = o.reference_at(t).unwrap_or(f64::NAN);
            writeln!(w, "{t:e},{s:e},{r:e},{e:e}")?;
        }
        w.flush()?;
        Ok(())
    }

    fn persist_failure(&self, out: &Path, last_valid: &State) -> Result<()> {
        let path = out.join("last_valid.vtk");
        last_valid.save(&path)?;
        self.write_events(out)?;
        log::error!("run aborted; last valid state written to {}", path.display());
        Ok(())
    }
}

fn as_invariant(e: Error) -> Error {
    match e {
        Error::Invariant(_) => e,
        other => Error::Invariant(other.to_string()),
    }
}

fn is_multiple(t: f64, every: f64) -> bool {
    let k = (t / every).round();
    k > 0.0 && (t - k * every).abs() <= 1e-9 * every
}

#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    pub rows: Vec<StatsRow>,
    pub snapshots: Vec<PathBuf>,
    pub oracle_l2: Option<f64>,
}

/// Initial grain state helper for hand-built meshes: one grain per label with density `rho`.
pub fn uniform_grains(mesh: &Mesh, rho: f64) -> Grains {
    surface_areas(mesh).into_iter().map(|(s, a)| (s, GrainState::new(rho, a))).collect()
}

/// Reference curve for presets that have one (single segment, no recrystallization).
pub fn oracle_track(cfg: &RunConfig) -> Option<OracleTrack> {
    let spec = cfg.generator.as_ref()?;
    if cfg.schedule.segments.len() != 1 || cfg.schedule.rex {
        return None;
    }
    let seg = &cfg.schedule.segments[0];
    let p = cfg.props(seg);
    let tau = cfg.tau();
    let end = cfg.schedule.total();
    match &spec.preset {
        Preset::Circle { r0, rho_inside, rho_outside, .. } if p.gamma > 0.0 && cfg.schedule.capillarity == 1.0 => {
            // dS/dt = 2Mγ(−π + √(πS)·δ[E]/γ): dimensionless in Mγt
            let e = p.delta * tau * (rho_outside - rho_inside) / p.gamma;
            let scale = p.mobility * p.gamma;
            let dt = cfg.schedule.dt * scale / 10.0;
            let s_min = spec.h * spec.h;
            Some(OracleTrack {
                surface: SurfaceId(1),
                reference: oracles::circle_surface_ode(*r0, e, dt, end * scale * (1.0 + 1e-9), s_min),
                time_scale: scale,
                samples: Vec::new(),
            })
        }
        Preset::TripleJunction { a, rho_upper, rho_lower } => {
            let v = p.mobility * p.delta * tau * (rho_lower - rho_upper);
            if !(v > 0.0) {
                return None;
            }
            let cap = cfg.schedule.capillarity == 1.0;
            Some(OracleTrack {
                surface: SurfaceId(0),
                reference: oracles::triple_junction_curve(*a, v, cap, cfg.schedule.dt / 10.0),
                time_scale: 1.0,
                samples: Vec::new(),
            })
        }
        _ => None,
    }
}
