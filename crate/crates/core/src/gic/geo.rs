//! Field-to-branch projection.

use crate::case::{BusGmd, CaseData, GmdBranch};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How the north/east displacement between two buses is measured.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DistanceModel {
    /// Latitude-dependent kilometres per degree, as used by the NERC GIC
    /// application guide and the EPRI benchmark.
    #[default]
    Geodetic,
    /// Equirectangular projection on a sphere.
    Spherical { radius_km: f64 },
}

impl DistanceModel {
    pub const EARTH_RADIUS_KM: f64 = 6371.0;

    pub fn spherical() -> Self {
        DistanceModel::Spherical {
            radius_km: Self::EARTH_RADIUS_KM,
        }
    }

    /// Northward and eastward displacement from `a` to `b`, km.
    pub fn displacement(self, a: &BusGmd, b: &BusGmd) -> (f64, f64) {
        let dlat = b.lat - a.lat;
        let mut dlon = b.lon - a.lon;
        if dlon > 180.0 {
            dlon -= 360.0;
        } else if dlon <= -180.0 {
            dlon += 360.0;
        }
        let mean = (0.5 * (a.lat + b.lat)).to_radians();
        match self {
            DistanceModel::Geodetic => {
                let km_n = 111.133 - 0.56 * (2.0 * mean).cos();
                let km_e = (111.5065 - 0.1872 * (2.0 * mean).cos()) * mean.cos();
                (km_n * dlat, km_e * dlon)
            }
            DistanceModel::Spherical { radius_km } => (
                radius_km * dlat.to_radians(),
                radius_km * dlon.to_radians() * mean.cos(),
            ),
        }
    }
}

/// `(L_N, L_E)` of a dc branch, measured from the coordinates of the ac
/// buses that parent its endpoints.
pub fn branch_lengths(case: &CaseData, branch: &GmdBranch) -> Result<(f64, f64)> {
    branch_lengths_with(case, branch, DistanceModel::Geodetic)
}

pub fn branch_lengths_with(case: &CaseData, branch: &GmdBranch, model: DistanceModel) -> Result<(f64, f64)> {
    let coord = |node: usize| -> Result<&BusGmd> {
        let parent = case
            .gmd_bus(node)
            .ok_or(Error::MissingCoordinates {
                branch: branch.index,
                bus: 0,
            })?
            .parent;
        case.coordinates(parent).ok_or(Error::MissingCoordinates {
            branch: branch.index,
            bus: parent,
        })
    };
    let a = coord(branch.f_bus)?;
    let b = coord(branch.t_bus)?;
    Ok(model.displacement(a, b))
}

/// Series voltage induced by a uniform field of `e_mag` V/km pointing
/// `e_dir_deg` degrees clockwise from north, over a branch spanning
/// `l_n` km north and `l_e` km east.
pub fn induced_voltage<T: Scalar>(e_mag: T, e_dir_deg: T, l_n: T, l_e: T) -> T {
    // math-convention angle (counter-clockwise from east)
    let phi = (T::of(90.0) - e_dir_deg).to_radians();
    e_mag * (phi.sin() * l_n + phi.cos() * l_e)
}
