//! Synthetic cities with planted regeneration effects.
//!
//! Wards are cells of a rectilinear lat/lon grid, boroughs are blocks of
//! cells. Venues are placed strictly inside their cell. Treated wards get
//! venue creation and in-flow scaled by `(1 + delta)^(e * (t - 1))` in year
//! `t` and their 2015 deprivation score lowered by `beta * delta * e`.

mod oracle;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, LogNormal, Normal, Poisson};
use serde::Serialize;

pub use oracle::{oracle_label_counts, oracle_ward_metrics, LabelCounts};

use crate::pipeline::Inputs;
use crate::geo::{haversine_km, polygon_centroid, LatLon, Polygon};
use crate::ingest::time::year_start;
use crate::ingest::{
    write_expenditure_csv, write_imd_csv, write_transitions_csv, write_venues_csv, write_wards_geojson,
    DeprivationRecord, Edition, ExpenditureCategory, ExpenditureRecord, ExpenditureTable, FiscalYear, ImdTable,
    Transition, TransitionLog, Venue, VenueIdx, VenueTable, Ward, WardSet,
};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Who receives the planted effect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Treatment {
    /// More deprived than the median ward and mean CEA above 1; `e = 1`.
    DeprivedHighCea,
    /// A uniformly random share of wards; `e = 1`.
    Random { fraction: f64 },
    /// Every ward, with strength `e ~ N(0, 1)`.
    Graded,
}

/// Which quantities the effect scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Channels {
    pub venue_creation: bool,
    pub inflow: bool,
}

impl Default for Channels {
    fn default() -> Self {
        Channels { venue_creation: true, inflow: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthConfig {
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Borough block size in cells (rows, cols).
    pub borough_rows: usize,
    pub borough_cols: usize,
    pub origin: LatLon,
    pub cell_lat: f64,
    pub cell_lon: f64,
    pub venues_per_ward: f64,
    /// Gamma shape of the per-ward venue intensity; larger is less dispersed.
    pub venue_dispersion: f64,
    /// Share of venues present before the first year.
    pub initial_venue_share: f64,
    pub cultural_fraction: f64,
    pub transitions_per_year: usize,
    pub gravity_exponent: f64,
    pub first_year: i32,
    pub years: usize,
    pub treatment: Treatment,
    pub channels: Channels,
    pub delta: f64,
    pub sigma: f64,
    pub beta: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            grid_rows: 24,
            grid_cols: 25,
            borough_rows: 4,
            borough_cols: 5,
            origin: LatLon::new(51.30, -0.50),
            cell_lat: 0.015,
            cell_lon: 0.04,
            venues_per_ward: 33.0,
            venue_dispersion: 4.0,
            initial_venue_share: 0.55,
            cultural_fraction: 0.25,
            transitions_per_year: 1_000_000,
            gravity_exponent: 1.5,
            first_year: 2011,
            years: 3,
            treatment: Treatment::DeprivedHighCea,
            channels: Channels::default(),
            delta: 0.5,
            sigma: 0.5,
            beta: 10.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Infeasible(m.to_string()));
        if self.grid_rows == 0 || self.grid_cols == 0 || self.borough_rows == 0 || self.borough_cols == 0 {
            return bad("grid and borough dimensions must be positive");
        }
        if !(self.venues_per_ward > 0.0 && self.venue_dispersion > 0.0) {
            return bad("venues per ward and dispersion must be positive");
        }
        if self.transitions_per_year == 0 || self.years == 0 {
            return bad("transitions per year and years must be positive");
        }
        if !(0.0..=1.0).contains(&self.cultural_fraction) {
            return bad("more cultural venues than venues (cultural_fraction must lie in [0, 1])");
        }
        if !(0.0..=1.0).contains(&self.initial_venue_share) {
            return bad("initial_venue_share must lie in [0, 1]");
        }
        if !(self.delta >= 0.0 && self.sigma >= 0.0) {
            return bad("delta and sigma must be nonnegative");
        }
        if !(self.cell_lat > 0.0 && self.cell_lon > 0.0 && self.gravity_exponent >= 0.0) {
            return bad("cell size must be positive and the gravity exponent nonnegative");
        }
        if let Treatment::Random { fraction } = self.treatment {
            if !(0.0..=1.0).contains(&fraction) {
                return bad("treated fraction must lie in [0, 1]");
            }
        }
        Ok(())
    }

    pub fn n_wards(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    /// Calendar years covered by the transitions.
    pub fn calendar_years(&self) -> Vec<i32> {
        (0..self.years as i32).map(|i| self.first_year + i).collect()
    }

    /// Fiscal years whose spending maps onto the calendar years (offset 1).
    pub fn fiscal_years(&self) -> Vec<String> {
        self.calendar_years().iter().map(|&y| FiscalYear { start: y - 1 }.label()).collect()
    }

    /// Grid cell of a point, or `None` outside the grid.
    pub fn cell_of(&self, p: LatLon) -> Option<(usize, usize)> {
        let r = ((p.lat - self.origin.lat) / self.cell_lat).floor();
        let c = ((p.lon - self.origin.lon) / self.cell_lon).floor();
        (r >= 0.0 && c >= 0.0 && (r as usize) < self.grid_rows && (c as usize) < self.grid_cols)
            .then_some((r as usize, c as usize))
    }

    pub fn ward_code(&self, r: usize, c: usize) -> String {
        format!("W{r:02}{c:02}")
    }

    pub fn centre(&self) -> LatLon {
        LatLon::new(
            self.origin.lat + self.cell_lat * self.grid_rows as f64 / 2.0,
            self.origin.lon + self.cell_lon * self.grid_cols as f64 / 2.0,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerCounts {
    pub wards: usize,
    pub boroughs: usize,
    pub venues: usize,
    pub cultural_venues: usize,
    pub venues_created_per_year: BTreeMap<i32, usize>,
    pub transitions_per_year: BTreeMap<i32, usize>,
}

/// Ground truth shipped next to the generated files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ledger {
    pub seed: u64,
    pub config: SynthConfig,
    /// Wards with a nonzero effect, sorted.
    pub treated: Vec<String>,
    /// Effect strength `e` per ward (0 for untreated).
    pub effect: BTreeMap<String, f64>,
    /// True growth factor of venue creation and in-flow from the first to
    /// the last year, `(1 + delta)^(e * (years - 1))` per active channel.
    pub growth_factor: BTreeMap<String, f64>,
    pub rank_2010: BTreeMap<String, u32>,
    pub rank_2015: BTreeMap<String, u32>,
    pub delta_rank: BTreeMap<String, i64>,
    pub counts: LedgerCounts,
}

#[derive(Debug, Clone)]
pub struct SynthBundle {
    pub config: SynthConfig,
    pub venues: Vec<Venue>,
    /// Indices refer to `venues`.
    pub transitions: Vec<Transition>,
    pub wards: Vec<Ward>,
    pub expenditure: Vec<ExpenditureRecord>,
    pub imd: Vec<DeprivationRecord>,
    pub ledger: Ledger,
}

pub const BUNDLE_FILES: [&str; 6] =
    ["venues.csv", "transitions.csv", "wards.geojson", "expenditure.csv", "imd.csv", "ledger.json"];

impl SynthBundle {
    /// In-memory tables equivalent to parsing the written files.
    pub fn tables(&self) -> Inputs {
        let venues = VenueTable::from_venues(self.venues.iter().cloned());
        let transitions = TransitionLog::from_transitions(self.transitions.iter().copied(), &venues);
        Inputs {
            transitions,
            venues,
            wards: WardSet::from_wards(self.wards.iter().cloned()),
            expenditure: ExpenditureTable::from_records(self.expenditure.iter().cloned()),
            imd: ImdTable::from_records(self.imd.iter().cloned()).expect("generated ranks are permutations"),
        }
    }

    /// Writes the five input files plus `ledger.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, SynthError> {
        std::fs::create_dir_all(dir).map_err(|source| SynthError::Io { path: dir.to_path_buf(), source })?;
        let venues = VenueTable::from_venues(self.venues.iter().cloned());
        let mut paths = Vec::new();
        for name in BUNDLE_FILES {
            let path = dir.join(name);
            let io = |source| SynthError::Io { path: path.clone(), source };
            let csv_io = |e: csv::Error| io(std::io::Error::other(e));
            let out =
                BufWriter::with_capacity(1 << 20, File::create(&path).map_err(|e| SynthError::Io { path: path.clone(), source: e })?);
            match name {
                "venues.csv" => write_venues_csv(out, &self.venues).map_err(csv_io)?,
                "transitions.csv" => write_transitions_csv(out, &self.transitions, &venues).map_err(io)?,
                "wards.geojson" => write_wards_geojson(out, &self.wards).map_err(|e| io(e.into()))?,
                "expenditure.csv" => write_expenditure_csv(out, &self.expenditure).map_err(csv_io)?,
                "imd.csv" => write_imd_csv(out, &self.imd).map_err(csv_io)?,
                _ => serde_json::to_writer_pretty(out, &self.ledger).map_err(|e| io(e.into()))?,
            }
            paths.push(path);
        }
        Ok(paths)
    }
}

const CULTURAL: [&str; 5] = ["Museum", "Art Gallery", "Theater", "Music Venue", "Library"];
const OTHER: [(&str, &str); 6] = [
    ("Café", "Food"),
    ("Pub", "Nightlife Spot"),
    ("Restaurant", "Food"),
    ("Office", "Professional & Other Places"),
    ("Park", "Outdoors & Recreation"),
    ("Train Station", "Travel & Transport"),
];

fn sub_region(cfg: &SynthConfig, r: usize, c: usize) -> &'static str {
    let y = (r as f64 + 0.5) / cfg.grid_rows as f64 - 0.5;
    let x = (c as f64 + 0.5) / cfg.grid_cols as f64 - 0.5;
    if x.abs() < 0.2 && y.abs() < 0.2 {
        "Central"
    } else if x.abs() >= y.abs() {
        if x > 0.0 {
            "East"
        } else {
            "West"
        }
    } else if y > 0.0 {
        "North"
    } else {
        "South"
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Cumulative weights; `pick` finds the first index whose running sum
/// exceeds `u * total`.
struct Cumulative(Vec<f64>);

impl Cumulative {
    fn new(weights: impl IntoIterator<Item = f64>) -> Self {
        let mut s = 0.0;
        Cumulative(
            weights
                .into_iter()
                .map(|w| {
                    s += w;
                    s
                })
                .collect(),
        )
    }

    fn total(&self) -> f64 {
        self.0.last().copied().unwrap_or(0.0)
    }

    fn pick(&self, rng: &mut impl Rng) -> usize {
        let u = rng.random::<f64>() * self.total();
        self.0.partition_point(|&c| c <= u).min(self.0.len() - 1)
    }
}

fn ranks_desc(scores: &[f64]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut rank = vec![0; scores.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r as u32 + 1;
    }
    rank
}

pub fn generate_city(cfg: &SynthConfig) -> Result<SynthBundle, SynthError> {
    cfg.validate()?;
    let (rows, cols) = (cfg.grid_rows, cfg.grid_cols);
    let n_wards = cfg.n_wards();
    let years = cfg.calendar_years();
    let t_len = years.len();

    // Wards, in (row, col) order which is also ward_code order.
    let mut layout = stream(cfg.seed, 0);
    let pop_noise: LogNormal<f64> = LogNormal::new(0.0, 0.25).unwrap();
    let mut wards = Vec::with_capacity(n_wards);
    let mut borough_of = Vec::with_capacity(n_wards);
    let mut centres = Vec::with_capacity(n_wards);
    for r in 0..rows {
        for c in 0..cols {
            let lat0 = cfg.origin.lat + r as f64 * cfg.cell_lat;
            let lon0 = cfg.origin.lon + c as f64 * cfg.cell_lon;
            let (lat1, lon1) = (lat0 + cfg.cell_lat, lon0 + cfg.cell_lon);
            let poly: Polygon = vec![vec![
                LatLon::new(lat0, lon0),
                LatLon::new(lat0, lon1),
                LatLon::new(lat1, lon1),
                LatLon::new(lat1, lon0),
                LatLon::new(lat0, lon0),
            ]];
            let centroid = polygon_centroid(std::slice::from_ref(&poly));
            let b = (r / cfg.borough_rows) * cols.div_ceil(cfg.borough_cols) + c / cfg.borough_cols;
            borough_of.push(b);
            centres.push(centroid.point);
            let population = (10_000.0 * pop_noise.sample(&mut layout)).round().max(100.0) as u64;
            wards.push(Ward::new(
                cfg.ward_code(r, c),
                format!("B{b:02}"),
                sub_region(cfg, r, c),
                vec![poly],
                centroid.area_km2,
                Some(population),
            ));
        }
    }
    let n_boroughs = borough_of.iter().max().map_or(0, |b| b + 1);

    // Spending: total services scale with borough size; culture share ~4%.
    let mut spend = stream(cfg.seed, 1);
    let share_noise = LogNormal::new(0.0, 0.35).unwrap();
    let year_noise = LogNormal::new(0.0, 0.05).unwrap();
    let part_noise = LogNormal::new(0.0, 0.2).unwrap();
    let mut borough_wards = vec![0usize; n_boroughs];
    borough_of.iter().for_each(|&b| borough_wards[b] += 1);
    let base_share: Vec<f64> = (0..n_boroughs).map(|_| 0.04 * share_noise.sample(&mut spend)).collect();
    let base_total: Vec<f64> =
        (0..n_boroughs).map(|b| 1.0e7 * borough_wards[b] as f64 * year_noise.sample(&mut spend)).collect();
    let parts = [
        (ExpenditureCategory::OpenSpaces, 0.35),
        (ExpenditureCategory::CultureHeritage, 0.20),
        (ExpenditureCategory::LibraryService, 0.25),
        (ExpenditureCategory::RecreationSport, 0.15),
        (ExpenditureCategory::Tourism, 0.05),
    ];
    let mut expenditure = Vec::new();
    // [fy][borough] = (culture, total)
    let mut ce_te = vec![vec![(0.0, 0.0); n_boroughs]; t_len];
    for (fy_i, fy) in cfg.fiscal_years().iter().enumerate() {
        for b in 0..n_boroughs {
            let total = (base_total[b] * year_noise.sample(&mut spend)).round();
            let culture = base_share[b] * year_noise.sample(&mut spend) * total;
            let w: Vec<f64> = parts.iter().map(|(_, p)| p * part_noise.sample(&mut spend)).collect();
            let wsum: f64 = w.iter().sum();
            let mut cultural_sum = 0.0;
            for ((cat, _), wi) in parts.iter().zip(&w) {
                let amount = (culture * wi / wsum).round();
                cultural_sum += amount;
                expenditure.push(ExpenditureRecord {
                    borough_code: format!("B{b:02}"),
                    fiscal_year: fy.clone(),
                    category: *cat,
                    amount,
                });
            }
            expenditure.push(ExpenditureRecord {
                borough_code: format!("B{b:02}"),
                fiscal_year: fy.clone(),
                category: ExpenditureCategory::TotalServices,
                amount: total,
            });
            ce_te[fy_i][b] = (cultural_sum, total);
        }
    }
    // Ward CEA equals its borough's share over the city share.
    let cea_mean: Vec<f64> = (0..n_wards)
        .map(|w| {
            let b = borough_of[w];
            (0..t_len)
                .map(|fy| {
                    let city_c: f64 = (0..n_boroughs).map(|k| ce_te[fy][k].0).sum();
                    let city_t: f64 = (0..n_boroughs).map(|k| ce_te[fy][k].1).sum();
                    (ce_te[fy][b].0 / ce_te[fy][b].1) / (city_c / city_t)
                })
                .sum::<f64>()
                / t_len as f64
        })
        .collect();

    // Baseline deprivation: east more deprived, plus ward noise.
    let mut dep = stream(cfg.seed, 2);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let score10: Vec<f64> = (0..n_wards)
        .map(|w| {
            let c = w % cols;
            let east = if cols > 1 { c as f64 / (cols - 1) as f64 - 0.5 } else { 0.0 };
            28.0 + 12.0 * east + 6.0 * normal.sample(&mut dep)
        })
        .collect();
    let rank10 = ranks_desc(&score10);
    let median_rank = {
        let mut r = rank10.clone();
        r.sort_unstable();
        let n = r.len();
        if n % 2 == 1 {
            r[n / 2] as f64
        } else {
            (r[n / 2 - 1] + r[n / 2]) as f64 / 2.0
        }
    };

    let mut treat_rng = stream(cfg.seed, 3);
    let effect: Vec<f64> = match cfg.treatment {
        Treatment::DeprivedHighCea => {
            (0..n_wards).map(|w| ((rank10[w] as f64) < median_rank && cea_mean[w] > 1.0) as u8 as f64).collect()
        }
        Treatment::Random { fraction } => {
            let k = (fraction * n_wards as f64).round() as usize;
            let mut e = vec![0.0; n_wards];
            for i in sample(&mut treat_rng, n_wards, k.min(n_wards)).iter() {
                e[i] = 1.0;
            }
            e
        }
        Treatment::Graded => (0..n_wards).map(|_| normal.sample(&mut treat_rng)).collect(),
    };
    let multiplier = |w: usize, t: usize| (1.0 + cfg.delta).powf(effect[w] * t as f64);

    let score15: Vec<f64> =
        (0..n_wards).map(|w| score10[w] - cfg.beta * cfg.delta * effect[w] + cfg.sigma * normal.sample(&mut dep)).collect();
    let rank15 = ranks_desc(&score15);

    // Venues: initial stock plus yearly creations.
    let mut vrng = stream(cfg.seed, 4);
    let intensity = Gamma::new(cfg.venue_dispersion, 1.0 / cfg.venue_dispersion).unwrap();
    let popularity = LogNormal::new(0.0, 1.0).unwrap();
    let new_share = (1.0 - cfg.initial_venue_share) / t_len as f64;
    let lo_initial = year_start(cfg.first_year - 3);
    let mut venues: Vec<Venue> = Vec::new();
    let mut venue_ward: Vec<usize> = Vec::new();
    let mut venue_pop: Vec<f64> = Vec::new();
    let mut created_per_year: BTreeMap<i32, usize> = years.iter().map(|&y| (y, 0)).collect();
    for w in 0..n_wards {
        let (r, c) = (w / cols, w % cols);
        let lam = cfg.venues_per_ward * intensity.sample(&mut vrng);
        let mut counts = vec![Poisson::new(lam * cfg.initial_venue_share).map_or(0.0, |p| p.sample(&mut vrng)) as usize];
        for t in 0..t_len {
            let m = if cfg.channels.venue_creation { multiplier(w, t) } else { 1.0 };
            let mean = lam * new_share * m;
            counts.push(if mean > 0.0 { Poisson::new(mean).unwrap().sample(&mut vrng) as usize } else { 0 });
        }
        for (slot, &k) in counts.iter().enumerate() {
            let (lo, hi) = if slot == 0 {
                (lo_initial, year_start(cfg.first_year))
            } else {
                (year_start(years[slot - 1]), year_start(years[slot - 1] + 1))
            };
            for _ in 0..k {
                let lat = cfg.origin.lat + cfg.cell_lat * (r as f64 + 0.05 + 0.9 * vrng.random::<f64>());
                let lon = cfg.origin.lon + cfg.cell_lon * (c as f64 + 0.05 + 0.9 * vrng.random::<f64>());
                let cultural = vrng.random::<f64>() < cfg.cultural_fraction;
                let (category, parent) = if cultural {
                    (CULTURAL[vrng.random_range(0..CULTURAL.len())], "Arts & Entertainment")
                } else {
                    OTHER[vrng.random_range(0..OTHER.len())]
                };
                venues.push(Venue {
                    id: String::new(),
                    lat,
                    lon,
                    category: category.to_string(),
                    parent_category: parent.to_string(),
                    is_cultural: cultural,
                    created_at: vrng.random_range(lo..hi),
                    user_count: vrng.random_range(1..500),
                });
                venue_ward.push(w);
                venue_pop.push(popularity.sample(&mut vrng));
                if slot > 0 {
                    *created_per_year.get_mut(&years[slot - 1]).unwrap() += 1;
                }
            }
        }
    }
    if venues.is_empty() {
        return Err(SynthError::Infeasible("no venues generated".into()));
    }
    for (i, v) in venues.iter_mut().enumerate() {
        v.id = format!("v{i:06}");
    }

    // Ward-to-ward distances for the gravity term.
    let dist: Vec<f64> =
        (0..n_wards * n_wards).map(|k| haversine_km(centres[k / n_wards], centres[k % n_wards])).collect();

    let mut trng = stream(cfg.seed, 5);
    let mut transitions = Vec::with_capacity(cfg.transitions_per_year * t_len);
    let mut transitions_per_year = BTreeMap::new();
    for (t, &year) in years.iter().enumerate() {
        let start = year_start(year);
        let active: Vec<usize> = (0..venues.len()).filter(|&v| venues[v].created_at < start).collect();
        if active.is_empty() {
            return Err(SynthError::Infeasible(format!("no venues exist before {year}")));
        }
        let origin_pick = Cumulative::new(active.iter().map(|&v| venue_pop[v]));
        let mut in_ward: Vec<Vec<usize>> = vec![Vec::new(); n_wards];
        for &v in &active {
            in_ward[venue_ward[v]].push(v);
        }
        let ward_pick: Vec<Cumulative> =
            in_ward.iter().map(|vs| Cumulative::new(vs.iter().map(|&v| venue_pop[v]))).collect();
        let attract: Vec<f64> = (0..n_wards)
            .map(|w| ward_pick[w].total() * if cfg.channels.inflow { multiplier(w, t) } else { 1.0 })
            .collect();
        let gravity: Vec<Cumulative> = (0..n_wards)
            .map(|i| Cumulative::new((0..n_wards).map(|j| attract[j] / (1.0 + dist[i * n_wards + j].powf(cfg.gravity_exponent)))))
            .collect();
        let span = year_start(year + 1) - start;
        for _ in 0..cfg.transitions_per_year {
            let o = active[origin_pick.pick(&mut trng)];
            let wd = gravity[venue_ward[o]].pick(&mut trng);
            let d = in_ward[wd][ward_pick[wd].pick(&mut trng)];
            let t_origin = start + trng.random_range(0..span);
            let t_dest = t_origin + trng.random_range(60..=10_800);
            transitions.push(Transition { origin: VenueIdx(o as u32), dest: VenueIdx(d as u32), t_origin, t_dest });
        }
        transitions_per_year.insert(year, cfg.transitions_per_year);
    }

    let mut imd = Vec::with_capacity(2 * n_wards);
    for (w, ward) in wards.iter().enumerate() {
        imd.push(DeprivationRecord { ward_code: ward.ward_code.clone(), edition: Edition::Imd2010, score: score10[w], rank: rank10[w] });
    }
    for (w, ward) in wards.iter().enumerate() {
        imd.push(DeprivationRecord { ward_code: ward.ward_code.clone(), edition: Edition::Imd2015, score: score15[w], rank: rank15[w] });
    }

    let code = |w: usize| wards[w].ward_code.clone();
    let channel_growth = |w: usize| (1.0 + cfg.delta).powf(effect[w] * (t_len as f64 - 1.0));
    let ledger = Ledger {
        seed: cfg.seed,
        config: cfg.clone(),
        treated: (0..n_wards).filter(|&w| effect[w] != 0.0).map(code).collect(),
        effect: (0..n_wards).map(|w| (code(w), effect[w])).collect(),
        growth_factor: (0..n_wards).map(|w| (code(w), channel_growth(w))).collect(),
        rank_2010: (0..n_wards).map(|w| (code(w), rank10[w])).collect(),
        rank_2015: (0..n_wards).map(|w| (code(w), rank15[w])).collect(),
        delta_rank: (0..n_wards).map(|w| (code(w), rank15[w] as i64 - rank10[w] as i64)).collect(),
        counts: LedgerCounts {
            wards: n_wards,
            boroughs: n_boroughs,
            venues: venues.len(),
            cultural_venues: venues.iter().filter(|v| v.is_cultural).count(),
            venues_created_per_year: created_per_year,
            transitions_per_year,
        },
    };
    Ok(SynthBundle { config: cfg.clone(), venues, transitions, wards, expenditure, imd, ledger })
}
