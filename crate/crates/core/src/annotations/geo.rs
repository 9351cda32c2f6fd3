use serde::{Deserialize, Serialize};

use super::AnnotationError;

pub const EARTH_RADIUS_KM: f64 = 6371.0;
pub const DEFAULT_GEO_LAMBDA_KM: f64 = 500.0;

/// A point or an axis-aligned lat/lon box (no antimeridian wrap).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeo", into = "RawGeo")]
pub enum GeoScope {
    Point {
        lat: f64,
        lon: f64,
    },
    Mbr {
        min_lat: f64,
        min_lon: f64,
        max_lat: f64,
        max_lon: f64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawGeo {
    Point {
        lat: f64,
        lon: f64,
    },
    Mbr {
        min_lat: f64,
        min_lon: f64,
        max_lat: f64,
        max_lon: f64,
    },
}

impl TryFrom<RawGeo> for GeoScope {
    type Error = AnnotationError;
    fn try_from(raw: RawGeo) -> Result<Self, Self::Error> {
        match raw {
            RawGeo::Point { lat, lon } => GeoScope::point(lat, lon),
            RawGeo::Mbr {
                min_lat,
                min_lon,
                max_lat,
                max_lon,
            } => GeoScope::mbr(min_lat, min_lon, max_lat, max_lon),
        }
    }
}

impl From<GeoScope> for RawGeo {
    fn from(g: GeoScope) -> Self {
        match g {
            GeoScope::Point { lat, lon } => RawGeo::Point { lat, lon },
            GeoScope::Mbr {
                min_lat,
                min_lon,
                max_lat,
                max_lon,
            } => RawGeo::Mbr {
                min_lat,
                min_lon,
                max_lat,
                max_lon,
            },
        }
    }
}

fn check_lat(v: f64) -> Result<(), AnnotationError> {
    if v.is_finite() && (-90.0..=90.0).contains(&v) {
        Ok(())
    } else {
        Err(AnnotationError::InvalidGeo(format!("latitude {v} out of range")))
    }
}

fn check_lon(v: f64) -> Result<(), AnnotationError> {
    if v.is_finite() && (-180.0..=180.0).contains(&v) {
        Ok(())
    } else {
        Err(AnnotationError::InvalidGeo(format!("longitude {v} out of range")))
    }
}

impl GeoScope {
    pub fn point(lat: f64, lon: f64) -> Result<Self, AnnotationError> {
        check_lat(lat)?;
        check_lon(lon)?;
        Ok(GeoScope::Point { lat, lon })
    }

    pub fn mbr(min_lat: f64, min_lon: f64, max_lat: f64, max_lon: f64) -> Result<Self, AnnotationError> {
        check_lat(min_lat)?;
        check_lat(max_lat)?;
        check_lon(min_lon)?;
        check_lon(max_lon)?;
        if min_lat > max_lat || min_lon > max_lon {
            return Err(AnnotationError::InvalidGeo(format!(
                "box min ({min_lat}, {min_lon}) exceeds max ({max_lat}, {max_lon})"
            )));
        }
        Ok(GeoScope::Mbr {
            min_lat,
            min_lon,
            max_lat,
            max_lon,
        })
    }

    /// Minimum bounding rectangle of a set of scopes; collapses to a point when degenerate.
    pub fn bounding<'a>(scopes: impl IntoIterator<Item = &'a GeoScope>) -> Option<GeoScope> {
        let mut it = scopes.into_iter();
        let mut b = it.next()?.bounds();
        for s in it {
            let o = s.bounds();
            b = [b[0].min(o[0]), b[1].min(o[1]), b[2].max(o[2]), b[3].max(o[3])];
        }
        Some(if b[0] == b[2] && b[1] == b[3] {
            GeoScope::Point { lat: b[0], lon: b[1] }
        } else {
            GeoScope::Mbr {
                min_lat: b[0],
                min_lon: b[1],
                max_lat: b[2],
                max_lon: b[3],
            }
        })
    }

    /// `[min_lat, min_lon, max_lat, max_lon]`; a point is a zero-size box.
    pub fn bounds(&self) -> [f64; 4] {
        match *self {
            GeoScope::Point { lat, lon } => [lat, lon, lat, lon],
            GeoScope::Mbr {
                min_lat,
                min_lon,
                max_lat,
                max_lon,
            } => [min_lat, min_lon, max_lat, max_lon],
        }
    }

    pub fn centroid(&self) -> (f64, f64) {
        let b = self.bounds();
        ((b[0] + b[2]) / 2.0, (b[1] + b[3]) / 2.0)
    }

    /// Spherical area in km²; zero for points and degenerate boxes.
    pub fn area_km2(&self) -> f64 {
        box_area_km2(self.bounds())
    }
}

fn box_area_km2(b: [f64; 4]) -> f64 {
    let dlon = (b[3] - b[1]).to_radians();
    let dsin = b[2].to_radians().sin() - b[0].to_radians().sin();
    (EARTH_RADIUS_KM * EARTH_RADIUS_KM * dlon * dsin).max(0.0)
}

/// Great-circle distance in kilometres.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

// Per axis: a shared coordinate when the ranges overlap, else the facing edges.
fn closest_coords(lo_a: f64, hi_a: f64, lo_b: f64, hi_b: f64) -> (f64, f64) {
    if hi_a < lo_b {
        (hi_a, lo_b)
    } else if hi_b < lo_a {
        (lo_a, hi_b)
    } else {
        let mid = (lo_a.max(lo_b) + hi_a.min(hi_b)) / 2.0;
        (mid, mid)
    }
}

/// Distance between the nearest points of two scopes (0 when they touch).
pub(crate) fn scope_distance_km(a: &GeoScope, b: &GeoScope) -> f64 {
    let (ba, bb) = (a.bounds(), b.bounds());
    let (lat_a, lat_b) = closest_coords(ba[0], ba[2], bb[0], bb[2]);
    let (lon_a, lon_b) = closest_coords(ba[1], ba[3], bb[1], bb[3]);
    haversine_km(lat_a, lon_a, lat_b, lon_b)
}

/// Similarity of two geographic scopes in `[0, 1]`.
///
/// Two boxes with positive area compare by spherical area Jaccard. Anything
/// involving a point (or a zero-area box) uses `exp(-d / lambda_km)` where `d`
/// is the distance between the nearest points of the two scopes.
pub fn geo_sim(a: &GeoScope, b: &GeoScope, lambda_km: f64) -> f64 {
    let (area_a, area_b) = (a.area_km2(), b.area_km2());
    if area_a > 0.0 && area_b > 0.0 {
        let (ba, bb) = (a.bounds(), b.bounds());
        let inter = [ba[0].max(bb[0]), ba[1].max(bb[1]), ba[2].min(bb[2]), ba[3].min(bb[3])];
        if inter[0] >= inter[2] || inter[1] >= inter[3] {
            return 0.0;
        }
        let i = box_area_km2(inter);
        return (i / (area_a + area_b - i)).clamp(0.0, 1.0);
    }
    (-scope_distance_km(a, b) / lambda_km).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Independent spherical-law-of-cosines distance, used as an oracle.
    fn cosine_law_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
        let (a, b) = (lat1.to_radians(), lat2.to_radians());
        let c = a.sin() * b.sin() + a.cos() * b.cos() * (lon2 - lon1).to_radians().cos();
        EARTH_RADIUS_KM * c.clamp(-1.0, 1.0).acos()
    }

    #[test]
    fn beijing_point_identity() {
        let p = GeoScope::point(39.55, 116.23).unwrap();
        assert_eq!(geo_sim(&p, &p, DEFAULT_GEO_LAMBDA_KM), 1.0);
    }

    #[test]
    fn beijing_vs_london_kernel() {
        let bj = GeoScope::point(39.55, 116.23).unwrap();
        let ld = GeoScope::point(51.50, -0.12).unwrap();
        let d = cosine_law_km(39.55, 116.23, 51.50, -0.12);
        assert!((d - 8135.0).abs() < 30.0, "distance {d}");
        let expected = (-d / 500.0).exp();
        let got = geo_sim(&bj, &ld, 500.0);
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn identical_boxes() {
        let m = GeoScope::mbr(10.0, 10.0, 20.0, 30.0).unwrap();
        assert_eq!(geo_sim(&m, &m, 500.0), 1.0);
    }

    #[test]
    fn nested_boxes_area_ratio() {
        let outer = GeoScope::mbr(0.0, 0.0, 10.0, 10.0).unwrap();
        let inner = GeoScope::mbr(0.0, 0.0, 10.0, 5.0).unwrap();
        assert!((geo_sim(&outer, &inner, 500.0) - 0.5).abs() < 1e-12);
        let far = GeoScope::mbr(40.0, 40.0, 50.0, 50.0).unwrap();
        assert_eq!(geo_sim(&outer, &far, 500.0), 0.0);
    }

    #[test]
    fn point_inside_box_is_full_match() {
        let p = GeoScope::point(5.0, 5.0).unwrap();
        let m = GeoScope::mbr(0.0, 0.0, 10.0, 10.0).unwrap();
        assert_eq!(geo_sim(&p, &m, 500.0), 1.0);
    }

    #[test]
    fn validation() {
        assert!(GeoScope::point(91.0, 0.0).is_err());
        assert!(GeoScope::point(0.0, -181.0).is_err());
        assert!(GeoScope::mbr(10.0, 0.0, 5.0, 1.0).is_err());
        assert!(GeoScope::point(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn json_forms() {
        let p: GeoScope = serde_json::from_str(r#"{"lat": 39.55, "lon": 116.23}"#).unwrap();
        assert_eq!(p, GeoScope::point(39.55, 116.23).unwrap());
        let m: GeoScope = serde_json::from_str(r#"{"min_lat":1,"min_lon":2,"max_lat":3,"max_lon":4}"#).unwrap();
        assert_eq!(m.bounds(), [1.0, 2.0, 3.0, 4.0]);
        assert!(serde_json::from_str::<GeoScope>(r#"{"lat": 99, "lon": 0}"#).is_err());
    }

    #[test]
    fn bounding_collapses_to_point() {
        let p = GeoScope::point(1.0, 2.0).unwrap();
        assert_eq!(GeoScope::bounding([&p, &p]), Some(p));
        let q = GeoScope::point(3.0, 4.0).unwrap();
        assert_eq!(GeoScope::bounding([&p, &q]).unwrap().bounds(), [1.0, 2.0, 3.0, 4.0]);
    }

    fn arb_scope() -> impl Strategy<Value = GeoScope> {
        prop_oneof![
            (-89.0..89.0f64, -179.0..179.0f64).prop_map(|(a, o)| GeoScope::point(a, o).unwrap()),
            (-89.0..80.0f64, -179.0..170.0f64, 0.0..9.0f64, 0.0..9.0f64).prop_map(|(a, o, h, w)| GeoScope::mbr(
                a,
                o,
                a + h,
                o + w
            )
            .unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn geo_sim_symmetric_bounded(a in arb_scope(), b in arb_scope()) {
            let s = geo_sim(&a, &b, 500.0);
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert!((s - geo_sim(&b, &a, 500.0)).abs() < 1e-12);
            prop_assert_eq!(geo_sim(&a, &a, 500.0), 1.0);
        }

        #[test]
        fn point_kernel_non_increasing_in_distance(lat in -60.0..60.0f64, lon in -170.0..170.0f64,
                                                  d1 in 0.0..20.0f64, d2 in 0.0..20.0f64) {
            let (near, far) = (d1.min(d2), d1.max(d2));
            let o = GeoScope::point(lat, lon).unwrap();
            let a = GeoScope::point(lat + near, lon).unwrap();
            let b = GeoScope::point(lat + far, lon).unwrap();
            prop_assert!(geo_sim(&o, &a, 500.0) >= geo_sim(&o, &b, 500.0));
        }

        #[test]
        fn haversine_agrees_with_cosine_law(a in -80.0..80.0f64, b in -170.0..170.0f64,
                                           c in -80.0..80.0f64, d in -170.0..170.0f64) {
            let h = haversine_km(a, b, c, d);
            let o = cosine_law_km(a, b, c, d);
            prop_assert!((h - o).abs() < 1e-3 * o.max(1.0));
        }
    }
}
