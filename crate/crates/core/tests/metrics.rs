use proptest::prelude::*;

use segmat::geometry::Vec3;
use segmat::mesh::SurfaceMesh;
use segmat::metrics::*;

/// A 2 x n strip of unit squares, two triangles each, face `2k` and `2k+1`
/// in column `k`.
fn strip(n: usize) -> SurfaceMesh {
    let mut vertices = Vec::new();
    for i in 0..=n {
        vertices.push(Vec3::new(i as f64, 0.0, 0.0));
        vertices.push(Vec3::new(i as f64, 1.0, 0.0));
    }
    let mut faces = Vec::new();
    for k in 0..n {
        let (a, b, c, d) = (2 * k, 2 * k + 1, 2 * k + 2, 2 * k + 3);
        faces.push([a, c, b]);
        faces.push([b, c, d]);
    }
    SurfaceMesh::new(vertices, faces)
}

fn cut_at(n: usize, column: usize) -> Vec<usize> {
    (0..2 * n).map(|f| usize::from(f / 2 >= column)).collect()
}

#[test]
fn cut_discrepancy_of_offset_boundaries() {
    let mesh = strip(10);
    let (a, b) = (cut_at(10, 4), cut_at(10, 5));
    // Both cuts are single rungs one unit apart.
    let cd = cut_discrepancy(&mesh, &a, &b).unwrap();
    assert!((cd - 1.0 / mean_radius(&mesh)).abs() < 1e-12);
    assert_eq!(cut_discrepancy(&mesh, &a, &a).unwrap(), 0.0);
    assert!((boundary_length(&mesh, &a) - 1.0).abs() < 1e-12);
}

#[test]
fn one_sided_boundary_reports_normalizer() {
    let mesh = strip(4);
    let none = vec![0; 8];
    match cut_discrepancy(&mesh, &none, &cut_at(4, 2)) {
        Err(MetricError::OneSidedBoundary(norm)) => assert_eq!(norm, mean_radius(&mesh)),
        other => panic!("{other:?}"),
    }
    let report = evaluate(&mesh, &none, &cut_at(4, 2)).unwrap();
    assert_eq!(report.cut_discrepancy, None);
}

#[test]
fn mismatched_lengths_are_rejected() {
    let areas = [1.0; 3];
    let a = Segmentation::new(&[0, 0, 0], &areas);
    let b = Segmentation::new(&[0, 0], &areas[..2]);
    assert!(matches!(rand_index(&a, &b), Err(MetricError::LengthMismatch(3, 2))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn metric_ranges_and_symmetry(
        pairs in proptest::collection::vec((0usize..4, 0usize..4, 0.1f64..3.0), 1..30)
    ) {
        let a: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let w: Vec<f64> = pairs.iter().map(|p| p.2).collect();
        let (sa, sb) = (Segmentation::new(&a, &w), Segmentation::new(&b, &w));
        let ri = rand_index(&sa, &sb).unwrap();
        prop_assert!((0.0..=1.0).contains(&ri));
        prop_assert!((ri - rand_index(&sb, &sa).unwrap()).abs() < 1e-12);
        let h = hamming(&sa, &sb).unwrap();
        let hr = hamming(&sb, &sa).unwrap();
        prop_assert!((h.missing_rate - hr.false_alarm_rate).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&h.distance));
        let c = consistency_error(&sa, &sb).unwrap();
        prop_assert!(c.lce <= c.gce + 1e-15);
        prop_assert!(c.gce <= 1.0);
        // Relabeling does not matter.
        let renamed: Vec<usize> = a.iter().map(|&l| 7 - l).collect();
        let sr = Segmentation::new(&renamed, &w);
        prop_assert!((rand_index(&sr, &sb).unwrap() - ri).abs() < 1e-12);
    }
}
