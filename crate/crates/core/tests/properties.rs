//! Property tests for the cross-module invariants.

use lfi::cli::presets::{sphere_markers, Preset};
use lfi::illumination::{LedPattern, Raster, RenderOptions, Renderer};
use lfi::math::{Rect, Vec2, Vec3};
use lfi::optics::{crosstalk_set_of, trace_to_scene, trace_to_source};
use lfi::patterns::{
    geometry_pattern, ltm_pattern, raytrace_pattern, solve_ltm, LtmSettings, SolveParams, TransportMatrix,
};
use lfi::placement::{generate_grid, optimize_layout, select_next, OptimizerParams, OptimizerState};
use lfi::scene::{Config, LensLayout, Occluder, Scene, SystemGeometry, Target};
use proptest::prelude::*;

fn v2(r: f64) -> impl Strategy<Value = Vec2> {
    (-r..r, -r..r).prop_map(|(x, y)| Vec2::new(x, y))
}

/// Small panel so that renders stay cheap.
fn small_geom() -> SystemGeometry {
    SystemGeometry { led_cols: 24, led_rows: 16, ..SystemGeometry::prototype() }
}

fn small_layout() -> LensLayout {
    LensLayout::from_centers(&[Vec2::ZERO, Vec2::new(45.0, 10.0), Vec2::new(-30.0, -40.0)], 19.0, 100.0, 1.0)
}

fn close(a: Vec2, b: Vec2, tol: f64) -> bool {
    let scale = a.norm().max(b.norm()).max(1.0);
    a.dist(b) <= tol * scale
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn nearest_pixel_inverts_pixel_centre(cols in 1usize..80, rows in 1usize..80, pitch in 0.3f64..6.0, k in 0usize..6400) {
        let g = SystemGeometry { led_cols: cols, led_rows: rows, led_pitch: pitch, ..SystemGeometry::prototype() };
        let (c, r) = g.pixel_coords(k % (cols * rows));
        prop_assert_eq!(g.nearest_pixel(g.led_pixel_center(c as i64, r as i64).unwrap()), Some((c, r)));
    }

    #[test]
    fn config_serialises_and_reloads(alpha in 0.0f64..=1.0, sectors in 1usize..90, seed in any::<u64>(), tau in 0.01f64..0.99) {
        let mut cfg = Preset::Desk.config();
        cfg.solver.alpha = alpha;
        cfg.solver.sectors = sectors;
        cfg.solver.seed = seed;
        cfg.solver.tau = tau;
        let again = Config::from_toml_str(&cfg.to_toml_string(), None).unwrap();
        prop_assert_eq!(&again, &cfg);
        prop_assert_eq!(Config::from_toml_str(&again.to_toml_string(), None).unwrap(), again);
    }

    #[test]
    fn crosstalk_count_law(centers in prop::collection::vec(v2(330.0), 0..14), o in v2(800.0)) {
        let n = centers.len();
        prop_assert_eq!(crosstalk_set_of(&centers, o, &SystemGeometry::prototype()).len(), n * n.saturating_sub(1));
    }

    #[test]
    fn same_lens_round_trip_and_magnification(o in v2(2000.0), l in v2(330.0), s in v2(300.0)) {
        let g = SystemGeometry::prototype();
        prop_assert!(close(trace_to_scene(trace_to_source(o, l, &g), l, &g), o, 1e-12));
        let p = trace_to_scene(s, l, &g);
        let m = (g.z_proj - g.z_lens) / g.z_lens;
        let want = s.dist(l) * m;
        prop_assert!((p.dist(l) - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn crosstalk_translates_with_the_system(centers in prop::collection::vec(v2(300.0), 2..8), o in v2(500.0), t in v2(200.0)) {
        let g = SystemGeometry::prototype();
        let a = crosstalk_set_of(&centers, o, &g);
        let moved: Vec<Vec2> = centers.iter().map(|&c| c + t).collect();
        let b = crosstalk_set_of(&moved, o + t, &g);
        prop_assert_eq!(a.len(), b.len());
        for (p, q) in a.positions.iter().zip(&b.positions) {
            prop_assert!(close(*p + t, *q, 1e-9));
        }
    }

    #[test]
    fn ltm_objective_never_rises_and_stays_in_box(
        rows in 1usize..8,
        cols in 1usize..6,
        seed in prop::collection::vec(0.0f64..1.0, 48),
        target in prop::collection::vec(-0.5f64..2.0, 8),
    ) {
        let data: Vec<f64> = seed.iter().copied().cycle().take(rows * cols).collect();
        let t = TransportMatrix::dense(rows, cols, &data).unwrap();
        let sol = solve_ltm(&t, &target[..rows], &SolveParams { iterations: 300, tolerance: 0.0 }).unwrap();
        prop_assert!(sol.objective.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(sol.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn greedy_layouts_never_overlap_and_respect_exclusions(
        half_w in 60.0f64..130.0,
        half_h in 45.0f64..80.0,
        alpha in 0.0f64..=1.0,
    ) {
        let mut cfg = Preset::Desk.config();
        cfg.geometry.placement_region = Rect::centered(half_w, half_h);
        cfg.solver.alpha = alpha;
        let params = OptimizerParams::from_config(&cfg);
        let spacing = params.lens.spacing();
        let opt = optimize_layout(&cfg.geometry, &params).unwrap();
        prop_assert!(opt.layout.validate(&cfg.geometry.placement_region).is_ok());
        let c = opt.layout.centers();
        for i in 0..c.len() {
            for j in 0..i {
                prop_assert!(c[i].dist(c[j]) >= spacing - 1e-9);
            }
        }
        // replay through the step API: no candidate ever sits inside an
        // earlier exclusion disk, so the excluded set only grows
        let mut grid = generate_grid(cfg.geometry.placement_region, cfg.geometry.grid_pitch, params.r_max);
        let mut st = OptimizerState::new(&cfg.geometry, &params);
        for p in grid.corners() {
            st.place(p);
            grid.mark_lens(p, spacing);
        }
        st.freeze();
        loop {
            let cands = grid.candidates();
            for g in &cands {
                prop_assert!(st.centers().iter().all(|l| l.dist(*g) > spacing));
            }
            let Some(sel) = select_next(&st, &cands) else { break };
            st.place(sel.point);
            grid.mark_lens(sel.point, spacing);
        }
        prop_assert_eq!(st.centers(), &c[..]);
    }

    #[test]
    fn layout_independent_of_thread_count(alpha in 0.0f64..=1.0, sectors in 4usize..48) {
        let mut cfg = Preset::Desk.config();
        cfg.solver.alpha = alpha;
        cfg.solver.sectors = sectors;
        let params = OptimizerParams::from_config(&cfg);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| optimize_layout(&cfg.geometry, &params).unwrap().layout.to_csv())
        };
        prop_assert_eq!(run(1), run(3));
    }

    #[test]
    fn render_is_linear_nonnegative_and_loses_energy_only(
        a in prop::collection::vec(0.0f64..0.5, 24 * 16),
        b in prop::collection::vec(0.0f64..0.5, 24 * 16),
        with_occluder in any::<bool>(),
    ) {
        let g = small_geom();
        let layout = small_layout();
        let scene = if with_occluder {
            Scene { occluders: vec![Occluder::Disk { center: Vec3::new(20.0, 0.0, 900.0), radius: 60.0 }], ..Default::default() }
        } else {
            Scene::default()
        };
        let raster = Raster::new(Rect::centered(2400.0, 1600.0), 8.0);
        let r = Renderer::new(&g, &layout, &scene, raster, RenderOptions { samples_per_lens: 4, ..Default::default() }).unwrap();
        let pa = LedPattern::from_values(24, 16, a.clone(), false).unwrap();
        let pb = LedPattern::from_values(24, 16, b.clone(), false).unwrap();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let ps = LedPattern::from_values(24, 16, sum, false).unwrap();
        let (ma, mb, ms) = (r.render(&pa).unwrap(), r.render(&pb).unwrap(), r.render(&ps).unwrap());
        for k in 0..ms.data.len() {
            prop_assert!(ma.data[k] >= 0.0 && ms.data[k] >= 0.0);
            let want = ma.data[k] + mb.data[k];
            prop_assert!((ms.data[k] - want).abs() <= 1e-9 * want.max(1e-300));
        }
        let e = r.emitted(&ps);
        prop_assert!(ms.total() <= e * (1.0 + 1e-12));
    }

    #[test]
    fn pattern_methods_respect_bounds(cx in -80.0f64..80.0, cy in -80.0f64..80.0, radius in 20.0f64..90.0) {
        let g = small_geom();
        let layout = small_layout();
        let centre = Vec3::new(cx, cy, 1550.0);
        let scene = Scene {
            target: Some(Target::Sphere { center: centre, radius }),
            markers: sphere_markers(centre, radius),
            ..Default::default()
        };
        let geo = geometry_pattern(&layout, &g, &scene.markers, 1);
        prop_assert!(geo.is_binary());
        prop_assert_eq!(&geo, &geometry_pattern(&layout, &g, &scene.markers, 1));
        let rt = raytrace_pattern(&layout, &g, &scene, 0.05, 300, 4, 7).unwrap();
        prop_assert!(rt.is_binary());
        let raster = Raster::new(Rect::centered(600.0, 600.0), 10.0);
        let settings = LtmSettings { iterations: 50, ..Default::default() };
        let (ltm, _) = ltm_pattern(&layout, &g, &scene, raster, &RenderOptions::default(), &settings).unwrap();
        prop_assert!(ltm.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn larger_target_never_shrinks_geometry_off_set(cx in -80.0f64..80.0, cy in -80.0f64..80.0, r in 20.0f64..80.0, grow in 1.0f64..40.0) {
        let g = SystemGeometry::prototype();
        let layout = small_layout();
        let c = Vec3::new(cx, cy, 1550.0);
        let small = geometry_pattern(&layout, &g, &sphere_markers(c, r), 0).off_mask();
        let large = geometry_pattern(&layout, &g, &sphere_markers(c, r + grow), 0).off_mask();
        prop_assert!(small.iter().zip(&large).all(|(s, l)| !*s || *l));
    }
}
