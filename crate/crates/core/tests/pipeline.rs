use proptest::prelude::*;
use xpmcap::bounds::{sweep, CubicInterference, EffectiveCoefficient, Interference, PowerPlan, SweepTable};
use xpmcap::config::Config;
use xpmcap::region::{build_region, excess_area, intersect, Region2D, RegionTag};
use xpmcap::svg::{regions_svg, sweep_svg, RegionLayer};

const CONFIG: &str = r#"
seed = 11

[sweep]
powers_dbm = [-10.0, -3.8, 0.0, 5.2, 10.0]
kappa = 13.8e6
g_x = { g_real = 35.0, g_abs_sq = 55.0 }
g_w = { g_real = 35.0, g_abs_sq = 55.0 }
"#;

fn table() -> SweepTable {
    let cfg = Config::from_toml_str(CONFIG).unwrap();
    let s = &cfg.sweep;
    let cubic = s.cubic().unwrap();
    sweep(
        &s.powers_dbm,
        s.plan().unwrap(),
        s.g_x.unwrap().effective().unwrap(),
        s.g_w.unwrap().effective().unwrap(),
        &Interference::Cubic { x: cubic, w: cubic },
        cfg.noise_params().unwrap().sigma_sq,
    )
    .unwrap()
}

#[test]
fn config_to_sweep() {
    let t = table();
    assert_eq!(t.rows.len(), 5);
    for r in &t.rows {
        assert!(r.u1 >= r.awgn1 && r.awgn1 >= r.ian1);
        assert!(r.u_sum >= r.u1 + r.u2);
    }
    let csv = t.to_csv();
    assert_eq!(csv.lines().count(), 6);
    let rows = SweepTable::parse_csv_rows(&csv).unwrap();
    for ([d, u1, _, us, ..], r) in rows.iter().zip(&t.rows) {
        assert!(d.is_finite());
        assert!((u1 - r.u1).abs() <= 1e-5 * r.u1.max(1e-3));
        assert!((us - r.u_sum).abs() <= 1e-5 * r.u_sum.max(1e-3));
    }
    let back: SweepTable = serde_json::from_str(&t.to_json().unwrap()).unwrap();
    assert_eq!(back, t);
}

#[test]
fn sweep_region_comparison() {
    let t = table();
    let r = &t.rows[1];
    let theorem = build_region(r.u1, r.u2, r.u_sum).unwrap();
    let awgn = Region2D::rect(RegionTag::AwgnBox, r.awgn1, r.awgn2).unwrap();
    let ian = Region2D::rect(RegionTag::IanBox, r.ian1, r.ian2).unwrap();
    // the interference-as-noise box is achievable, so it lies inside the outer bound
    assert!(excess_area(&ian, &theorem) <= 1e-12);
    assert!(intersect(&awgn, &theorem).area() <= awgn.area() + 1e-12);
    let svg = regions_svg(
        &[
            RegionLayer { region: &theorem, fill: "gray", stroke: "black", opacity: 0.4, label: "outer bound".into() },
            RegionLayer { region: &awgn, fill: "none", stroke: "red", opacity: 0.0, label: "AWGN".into() },
            RegionLayer { region: &ian, fill: "purple", stroke: "purple", opacity: 0.3, label: "IAN".into() },
        ],
        &[],
    );
    assert_eq!(svg.matches("<path").count(), 3);
    assert_eq!(sweep_svg(&t), sweep_svg(&table()));
}

#[test]
fn fixed_interferer_plan() {
    let g = EffectiveCoefficient::new(35.0, 55.0).unwrap();
    let cubic = CubicInterference { kappa: 13.8e6 };
    let t = sweep(&[-5.0, 0.0, 5.0], PowerPlan::FixedInterferer(1e-3), g, g, &Interference::Cubic { x: cubic, w: cubic }, 1e-3).unwrap();
    for r in &t.rows {
        assert_eq!(r.at.p2, 1e-3);
    }
    // receiver 2 sees growing interference from user 1
    assert!(t.rows[2].ian2 < t.rows[0].ian2);
}

proptest! {
    #[test]
    fn region_json_round_trip(u1 in 0.0f64..5.0, u2 in 0.0f64..5.0, us in 0.0f64..10.0) {
        let r = build_region(u1, u2, us).unwrap();
        let back = Region2D::from_json(&r.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, r);
    }

    #[test]
    fn intersection_is_commutative(a in 0.01f64..3.0, b in 0.01f64..3.0, c in 0.01f64..3.0, d in 0.01f64..3.0, s in 0.01f64..6.0) {
        let p = build_region(a, b, s).unwrap();
        let q = Region2D::rect(RegionTag::Custom, c, d).unwrap();
        let pq = intersect(&p, &q);
        let qp = intersect(&q, &p);
        prop_assert!((pq.area() - qp.area()).abs() <= 1e-12);
        prop_assert!(pq.area() <= p.area().min(q.area()) + 1e-12);
        let again = intersect(&pq, &pq);
        prop_assert!((again.area() - pq.area()).abs() <= 1e-12);
    }
}
