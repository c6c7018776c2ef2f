//! Time series of the geoelectric field.
//!
//! Samples carry magnitude (V/km) and direction in the geographic convention:
//! degrees clockwise from north, so 90° points east. Between samples the
//! north and east components are interpolated linearly.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub t_min: f64,
    pub e_mag_vkm: f64,
    pub e_dir_deg: f64,
}

/// Uniform field at one instant plus per-branch induced voltage overrides.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldAt {
    pub e_mag: f64,
    pub e_dir_deg: f64,
    /// GMD branch id → volts. Takes precedence over the uniform projection.
    pub overrides: BTreeMap<usize, f64>,
}

impl FieldAt {
    pub fn uniform(e_mag: f64, e_dir_deg: f64) -> Self {
        Self {
            e_mag,
            e_dir_deg,
            overrides: BTreeMap::new(),
        }
    }

    /// Multiplies the magnitude and every override by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let (mag, dir) = if c < 0.0 {
            (-c * self.e_mag, self.e_dir_deg + 180.0)
        } else {
            (c * self.e_mag, self.e_dir_deg)
        };
        Self {
            e_mag: mag,
            e_dir_deg: dir,
            overrides: self.overrides.iter().map(|(&k, &v)| (k, c * v)).collect(),
        }
    }

    /// North and east components, V/km.
    pub fn components(&self) -> (f64, f64) {
        let dir = self.e_dir_deg.to_radians();
        (self.e_mag * dir.cos(), self.e_mag * dir.sin())
    }

    pub fn from_components(north: f64, east: f64) -> Self {
        let mag = north.hypot(east);
        let dir = if mag == 0.0 { 0.0 } else { east.atan2(north).to_degrees() };
        Self::uniform(mag, dir)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldScenario {
    pub samples: Vec<FieldSample>,
    /// Period length Δ, minutes.
    pub dt: f64,
    /// GMD branch id → time series `(t_min, volts)`, sorted by time.
    pub overrides: BTreeMap<usize, Vec<(f64, f64)>>,
}

/// One period of a time-extended analysis; the field is taken at `t_mid`.
#[derive(Debug, Clone, PartialEq)]
pub struct Period {
    pub index: usize,
    pub t_start: f64,
    pub t_mid: f64,
    pub t_end: f64,
    pub field: FieldAt,
}

impl FieldScenario {
    pub fn new(samples: Vec<FieldSample>, dt: f64) -> Result<Self> {
        let s = Self {
            samples,
            dt,
            overrides: BTreeMap::new(),
        };
        s.check()?;
        Ok(s)
    }

    /// Single-sample scenario, handy for steady-state runs.
    pub fn constant(e_mag: f64, e_dir_deg: f64, span_min: f64, dt: f64) -> Result<Self> {
        Self::new(
            vec![
                FieldSample { t_min: 0.0, e_mag_vkm: e_mag, e_dir_deg },
                FieldSample { t_min: span_min, e_mag_vkm: e_mag, e_dir_deg },
            ],
            dt,
        )
    }

    fn check(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::Scenario("no samples".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Scenario(format!("dt must be positive, got {}", self.dt)));
        }
        for w in self.samples.windows(2) {
            if !(w[1].t_min > w[0].t_min) {
                return Err(Error::Scenario(format!(
                    "sample times must increase strictly ({} then {})",
                    w[0].t_min, w[1].t_min
                )));
            }
        }
        if let Some(s) = self.samples.iter().find(|s| !(s.e_mag_vkm >= 0.0)) {
            return Err(Error::Scenario(format!("negative field magnitude at t = {}", s.t_min)));
        }
        Ok(())
    }

    pub fn t_first(&self) -> f64 {
        self.samples[0].t_min
    }

    pub fn t_last(&self) -> f64 {
        self.samples[self.samples.len() - 1].t_min
    }

    /// Field at an arbitrary time, held constant outside the sampled span.
    pub fn at(&self, t: f64) -> FieldAt {
        let mut field = self.uniform_at(t);
        for (&branch, series) in &self.overrides {
            if let Some(v) = interpolate(series, t) {
                field.overrides.insert(branch, v);
            }
        }
        field
    }

    fn uniform_at(&self, t: f64) -> FieldAt {
        let s = &self.samples;
        let k = s.partition_point(|x| x.t_min <= t);
        if k == 0 {
            return FieldAt::uniform(s[0].e_mag_vkm, s[0].e_dir_deg);
        }
        if k == s.len() {
            let last = s[s.len() - 1];
            return FieldAt::uniform(last.e_mag_vkm, last.e_dir_deg);
        }
        let (a, b) = (s[k - 1], s[k]);
        let w = (t - a.t_min) / (b.t_min - a.t_min);
        let ca = FieldAt::uniform(a.e_mag_vkm, a.e_dir_deg).components();
        let cb = FieldAt::uniform(b.e_mag_vkm, b.e_dir_deg).components();
        let (n, e) = (ca.0 + w * (cb.0 - ca.0), ca.1 + w * (cb.1 - ca.1));
        let mut f = FieldAt::from_components(n, e);
        if f.e_mag == 0.0 {
            f.e_dir_deg = a.e_dir_deg;
        } else if a.e_dir_deg == b.e_dir_deg {
            // keep the user's angle verbatim instead of a round-tripped atan2
            f.e_dir_deg = a.e_dir_deg;
        }
        f
    }

    pub fn num_periods(&self) -> Result<usize> {
        let span = self.t_last() - self.t_first();
        let n = span / self.dt;
        let rounded = n.round();
        if rounded < 1.0 || (n - rounded).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::Scenario(format!(
                "dt = {} does not divide the scenario span of {} min",
                self.dt, span
            )));
        }
        Ok(rounded as usize)
    }

    /// Consecutive periods of length `dt`, field sampled at each midpoint.
    pub fn periods(&self) -> Result<Vec<Period>> {
        let n = self.num_periods()?;
        let t0 = self.t_first();
        Ok((0..n)
            .map(|k| {
                let t_start = t0 + k as f64 * self.dt;
                let t_mid = t_start + 0.5 * self.dt;
                Period {
                    index: k,
                    t_start,
                    t_mid,
                    t_end: t_start + self.dt,
                    field: self.at(t_mid),
                }
            })
            .collect())
    }

    /// Reads `t_min,e_mag_vkm,e_dir_deg`. Lines starting with `#` are skipped.
    pub fn read_field_csv(reader: impl Read, dt: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let samples = rdr.deserialize().collect::<std::result::Result<Vec<FieldSample>, _>>()?;
        Self::new(samples, dt)
    }

    /// Reads `t_min,gmd_branch_id,volts` override rows into this scenario.
    pub fn read_overrides_csv(&mut self, reader: impl Read) -> Result<()> {
        #[derive(Deserialize)]
        struct Row {
            t_min: f64,
            gmd_branch_id: usize,
            volts: f64,
        }
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        for row in rdr.deserialize() {
            let row: Row = row?;
            self.overrides.entry(row.gmd_branch_id).or_default().push((row.t_min, row.volts));
        }
        for (branch, series) in self.overrides.iter_mut() {
            series.sort_by(|a, b| a.0.total_cmp(&b.0));
            if series.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::Scenario(format!("duplicate override time for gmd branch {branch}")));
            }
        }
        Ok(())
    }

    pub fn write_field_csv(&self, writer: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for s in &self.samples {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn interpolate(series: &[(f64, f64)], t: f64) -> Option<f64> {
    let first = series.first()?;
    let k = series.partition_point(|x| x.0 <= t);
    if k == 0 {
        return Some(first.1);
    }
    if k == series.len() {
        return Some(series[k - 1].1);
    }
    let (a, b) = (series[k - 1], series[k]);
    Some(a.1 + (t - a.0) / (b.0 - a.0) * (b.1 - a.1))
}

/// Triangular ramp: 0 → `peak` over `rise_min`, back to 0 over `fall_min`,
/// sampled every `dt` minutes including both endpoints.
pub fn make_ramp_scenario(peak: f64, rise_min: f64, fall_min: f64, dt: f64, e_dir_deg: f64) -> Result<FieldScenario> {
    if !(peak >= 0.0) {
        return Err(Error::Scenario(format!("peak must be non-negative, got {peak}")));
    }
    if !(dt > 0.0) || !(rise_min >= 0.0) || !(fall_min >= 0.0) {
        return Err(Error::Scenario("ramp durations must be non-negative and dt positive".into()));
    }
    let span = rise_min + fall_min;
    let n = (span / dt).round() as usize;
    if n == 0 || ((n as f64) * dt - span).abs() > 1e-9 * span.max(1.0) {
        return Err(Error::Scenario(format!("dt = {dt} does not divide the ramp span of {span} min")));
    }
    let samples = (0..=n)
        .map(|k| {
            let t = k as f64 * dt;
            let mag = if t <= rise_min {
                if rise_min == 0.0 { peak } else { peak * t / rise_min }
            } else if fall_min == 0.0 {
                0.0
            } else {
                peak * (span - t).max(0.0) / fall_min
            };
            FieldSample { t_min: t, e_mag_vkm: mag, e_dir_deg }
        })
        .collect();
    FieldScenario::new(samples, dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_matches_case_study_shape() {
        let s = make_ramp_scenario(3.2, 180.0, 180.0, 5.0, 90.0).unwrap();
        assert_eq!(s.samples.len(), 73);
        assert_eq!(s.samples[0].e_mag_vkm, 0.0);
        assert_eq!(s.samples[36].e_mag_vkm, 3.2);
        assert_eq!(s.samples[72].e_mag_vkm, 0.0);
        assert!((s.samples[18].e_mag_vkm - 1.6).abs() < 1e-12);
        assert_eq!(s.num_periods().unwrap(), 72);
    }

    #[test]
    fn zero_peak_ramp_is_all_zero() {
        let s = make_ramp_scenario(0.0, 180.0, 180.0, 5.0, 90.0).unwrap();
        assert!(s.samples.iter().all(|x| x.e_mag_vkm == 0.0));
    }

    #[test]
    fn midpoint_sampling_interpolates() {
        let s = make_ramp_scenario(3.2, 180.0, 180.0, 5.0, 90.0).unwrap();
        let p = s.periods().unwrap();
        assert_eq!(p.len(), 72);
        assert!((p[0].t_mid - 2.5).abs() < 1e-12);
        assert!((p[0].field.e_mag - 3.2 * 2.5 / 180.0).abs() < 1e-12);
        assert_eq!(p[0].field.e_dir_deg, 90.0);
    }

    #[test]
    fn non_dividing_dt_is_rejected() {
        let s = FieldScenario::constant(1.0, 90.0, 10.0, 3.0).unwrap();
        assert!(s.periods().is_err());
    }

    #[test]
    fn decreasing_times_are_rejected() {
        let samples = vec![
            FieldSample { t_min: 5.0, e_mag_vkm: 1.0, e_dir_deg: 0.0 },
            FieldSample { t_min: 5.0, e_mag_vkm: 1.0, e_dir_deg: 0.0 },
        ];
        assert!(FieldScenario::new(samples, 1.0).is_err());
    }

    #[test]
    fn csv_and_overrides() {
        let text = "# header comment\nt_min,e_mag_vkm,e_dir_deg\n0,0,90\n60,2,90\n";
        let mut s = FieldScenario::read_field_csv(text.as_bytes(), 30.0).unwrap();
        s.read_overrides_csv("t_min,gmd_branch_id,volts\n0,2,10\n60,2,30\n".as_bytes()).unwrap();
        let f = s.at(30.0);
        assert!((f.e_mag - 1.0).abs() < 1e-12);
        assert_eq!(f.overrides[&2], 20.0);
        let mut buf = Vec::new();
        s.write_field_csv(&mut buf).unwrap();
        let back = FieldScenario::read_field_csv(buf.as_slice(), 30.0).unwrap();
        assert_eq!(back.samples, s.samples);
    }

    #[test]
    fn direction_interpolates_through_components() {
        let samples = vec![
            FieldSample { t_min: 0.0, e_mag_vkm: 1.0, e_dir_deg: 0.0 },
            FieldSample { t_min: 10.0, e_mag_vkm: 1.0, e_dir_deg: 90.0 },
        ];
        let s = FieldScenario::new(samples, 5.0).unwrap();
        let f = s.at(5.0);
        assert!((f.e_dir_deg - 45.0).abs() < 1e-12);
        assert!((f.e_mag - 0.5f64.sqrt()).abs() < 1e-12);
    }
}
