use pgnlm::io::{
    decode, encode, read_grid, read_header, write_grid, GridData, GridKind, IoError, ScalarWidth,
};
use pgnlm_core::{Grid, HermitianCov3, OpticalGrid, ScatteringVector};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    -1e6f64..1e6
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..6, 1usize..6)
}

fn slc() -> impl Strategy<Value = GridData> {
    dims().prop_flat_map(|(h, w)| {
        prop::collection::vec(prop::array::uniform6(finite()), h * w).prop_map(move |v| {
            GridData::Slc(
                Grid::new(
                    h,
                    w,
                    v.into_iter().map(ScatteringVector::from_parts).collect(),
                )
                .unwrap(),
            )
        })
    })
}

fn cov() -> impl Strategy<Value = GridData> {
    dims().prop_flat_map(|(h, w)| {
        prop::collection::vec(prop::array::uniform9(finite()), h * w).prop_map(move |v| {
            GridData::Covariance(
                Grid::new(
                    h,
                    w,
                    v.into_iter().map(HermitianCov3::from_scalars).collect(),
                )
                .unwrap(),
            )
        })
    })
}

fn optical() -> impl Strategy<Value = GridData> {
    (dims(), 1usize..5).prop_flat_map(|((h, w), b)| {
        prop::collection::vec(0.0f64..1.0, h * w * b)
            .prop_map(move |v| GridData::Optical(OpticalGrid::new(h, w, b, v).unwrap()))
    })
}

fn labels() -> impl Strategy<Value = GridData> {
    dims().prop_flat_map(|(h, w)| {
        prop::collection::vec(any::<u32>(), h * w)
            .prop_map(move |v| GridData::Labels(Grid::new(h, w, v).unwrap()))
    })
}

fn any_grid() -> impl Strategy<Value = GridData> {
    prop_oneof![slc(), cov(), optical(), labels()]
}

/// Rounds every real through f32, as a 32-bit file would.
fn narrowed(g: &GridData) -> GridData {
    let n = |x: f64| x as f32 as f64;
    match g {
        GridData::Slc(s) => {
            GridData::Slc(s.map(|v| ScatteringVector::from_parts(v.to_parts().map(n))))
        }
        GridData::Covariance(c) => {
            GridData::Covariance(c.map(|v| HermitianCov3::from_scalars(v.to_scalars().map(n))))
        }
        GridData::Optical(o) => GridData::Optical(
            OpticalGrid::new(
                o.height(),
                o.width(),
                o.bands(),
                o.data().iter().map(|&x| n(x)).collect(),
            )
            .unwrap(),
        ),
        GridData::Labels(l) => GridData::Labels(l.clone()),
    }
}

proptest! {
    #[test]
    fn f64_round_trip_is_exact(g in any_grid()) {
        let bytes = encode(&g, ScalarWidth::F64).unwrap();
        let back = decode(&bytes).unwrap();
        prop_assert_eq!(encode(&back, ScalarWidth::F64).unwrap(), bytes);
        prop_assert_eq!(back, g);
    }

    #[test]
    fn f32_round_trip_widens(g in any_grid()) {
        let back = decode(&encode(&g, ScalarWidth::F32).unwrap()).unwrap();
        prop_assert_eq!(back, narrowed(&g));
    }

    #[test]
    fn payload_length_matches_header(g in any_grid(), wide in any::<bool>()) {
        let w = if wide { ScalarWidth::F64 } else { ScalarWidth::F32 };
        let bytes = encode(&g, w).unwrap();
        let (h, wd) = g.dims();
        prop_assert_eq!(bytes.len() - 18, h * wd * g.channels() * w.bytes());
    }

    #[test]
    fn every_truncation_fails_cleanly(g in any_grid(), cut in 1usize..64) {
        let bytes = encode(&g, ScalarWidth::F64).unwrap();
        let cut = cut.min(bytes.len());
        prop_assert!(decode(&bytes[..bytes.len() - cut]).is_err());
    }
}

#[test]
fn file_round_trip_and_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("opt.psg");
    let g = GridData::Optical(
        OpticalGrid::new(2, 3, 2, (0..12).map(|i| i as f64 / 12.0).collect()).unwrap(),
    );
    write_grid(&path, &g, ScalarWidth::F64).unwrap();
    assert_eq!(read_grid(&path).unwrap(), g);
    let h = read_header(&path).unwrap();
    assert_eq!(
        (h.kind, h.height, h.width, h.channels),
        (GridKind::Optical, 2, 3, 2)
    );
}

#[test]
fn missing_file_error_names_path() {
    let err = read_grid("/nonexistent/dir/x.psg").unwrap_err();
    assert!(matches!(err, IoError::Io { .. }));
    assert!(err.to_string().contains("/nonexistent/dir/x.psg"));
}

#[test]
fn non_finite_slc_payload_is_rejected() {
    let g = GridData::Slc(Grid::new(1, 1, vec![ScatteringVector::ZERO]).unwrap());
    let mut bytes = encode(&g, ScalarWidth::F64).unwrap();
    bytes[18..26].copy_from_slice(&f64::NAN.to_le_bytes());
    assert!(matches!(decode(&bytes), Err(IoError::Grid(_))));
}
