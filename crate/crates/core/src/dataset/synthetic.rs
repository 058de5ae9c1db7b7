//! Deterministic clustered check-ins for tests and offline runs.
//!
//! Venues sit around a handful of hotspots inside a [`Region`]; hotspot
//! popularity is Zipf-like and each user revisits a small personal set of
//! venues, which gives the heavy-tailed, spatially clumped shape of real
//! check-in data without shipping the real file.

use chrono::{DateTime, TimeZone, Utc};

use crate::geo::{GeoPoint, PlanarPoint};
use crate::mechanisms::{MechanismParams, RandomStream};

use super::{Checkin, Region};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub region: Region,
    pub checkins: usize,
    pub users: usize,
    pub hotspots: usize,
    pub venues: usize,
    /// Standard deviation of venue scatter around its hotspot, meters.
    pub spread_m: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            region: Region::default(),
            checkins: 10_000,
            users: 400,
            hotspots: 24,
            venues: 1_500,
            spread_m: 350.0,
            seed: 42,
        }
    }
}

fn pick(cumulative: &[f64], u: f64) -> usize {
    let total = *cumulative.last().unwrap();
    cumulative.partition_point(|&c| c <= u * total).min(cumulative.len() - 1)
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

pub fn generate(spec: &SyntheticSpec) -> Vec<Checkin> {
    let region = spec.region;
    let proj = region.projection();
    let mut rnd = RandomStream::new(spec.seed, 0);
    let inside = |p: &PlanarPoint<f64>| region.contains(&proj.unproject(p));

    let lo = crate::geo::project::<f64>(&GeoPoint { lat: region.min_lat, lon: region.min_lon }, &proj).unwrap();
    let hi = crate::geo::project::<f64>(&GeoPoint { lat: region.max_lat, lon: region.max_lon }, &proj).unwrap();
    let hotspots: Vec<PlanarPoint<f64>> = (0..spec.hotspots.max(1))
        .map(|_| {
            // Keep hotspots away from the border so most scatter stays inside.
            let x = lo.x + (0.15 + 0.7 * rnd.uniform()) * (hi.x - lo.x);
            let y = lo.y + (0.15 + 0.7 * rnd.uniform()) * (hi.y - lo.y);
            PlanarPoint::new(x, y)
        })
        .collect();
    let hotspot_cdf: Vec<f64> = (1..=hotspots.len())
        .scan(0.0, |acc, k| {
            *acc += 1.0 / k as f64;
            Some(*acc)
        })
        .collect();

    let scatter = MechanismParams::gaussian(spec.spread_m).unwrap();
    let venues: Vec<GeoPoint> = (0..spec.venues.max(1))
        .map(|_| {
            let h = hotspots[pick(&hotspot_cdf, rnd.uniform())];
            let mut p = scatter.sample(&h, &mut rnd);
            while !inside(&p) {
                p = scatter.sample(&h, &mut rnd);
            }
            let g = proj.unproject(&p);
            GeoPoint { lat: round6(g.lat), lon: round6(g.lon) }
        })
        .collect();
    // Venue popularity follows the hotspot ordering plus a per-venue weight.
    let venue_weights: Vec<f64> = (0..venues.len()).map(|_| 1.0 / (1.0 + 20.0 * rnd.uniform())).collect();

    let start: DateTime<Utc> = Utc.with_ymd_and_hms(2010, 1, 1, 0, 0, 0).unwrap();
    let span_s = 300 * 24 * 3600;
    let users = spec.users.max(1);
    let mut favourites: Vec<(Vec<usize>, Vec<f64>)> = Vec::with_capacity(users);
    for _ in 0..users {
        let n = 3 + rnd.below(10);
        let chosen: Vec<usize> = (0..n).map(|_| rnd.below(venues.len())).collect();
        let mut acc = 0.0;
        let cdf = chosen
            .iter()
            .map(|&v| {
                acc += venue_weights[v];
                acc
            })
            .collect();
        favourites.push((chosen, cdf));
    }
    let user_cdf: Vec<f64> = (1..=users)
        .scan(0.0, |acc, k| {
            *acc += 1.0 / (k as f64).sqrt();
            Some(*acc)
        })
        .collect();

    let mut out: Vec<Checkin> = (0..spec.checkins)
        .map(|_| {
            let u = pick(&user_cdf, rnd.uniform());
            let (chosen, cdf) = &favourites[u];
            let v = chosen[pick(cdf, rnd.uniform())];
            let t = start + chrono::Duration::seconds(rnd.below(span_s) as i64);
            Checkin {
                user_id: u as u64,
                timestamp: t,
                location: venues[v],
                venue_id: v as u64,
            }
        })
        .collect();
    out.sort_by(|a, b| (a.user_id, b.timestamp).cmp(&(b.user_id, a.timestamp)));
    out
}

/// Renders check-ins in the TSV layout accepted by
/// [`read_checkins`](super::read_checkins).
pub fn to_tsv(checkins: &[Checkin]) -> String {
    let mut s = String::with_capacity(checkins.len() * 64);
    for c in checkins {
        s.push_str(&c.to_line());
        s.push('\n');
    }
    s
}
