use crra_core::crra::Method;
use crra_core::harness::{run_sweep, ScenarioConfig, SweepParam, SweepSpec};

#[test]
fn probe_default_sweeps() {
    let cfg = ScenarioConfig::default();
    for (param, values) in [
        (SweepParam::Bandwidth, cfg.bandwidth_sweep_hz.clone()),
        (SweepParam::Power, cfg.power_sweep_w.clone()),
    ] {
        let t0 = std::time::Instant::now();
        let spec = SweepSpec::new(param, values, Method::ALL.to_vec()).unwrap();
        let result = run_sweep(&cfg, &spec).unwrap();
        println!("== {param} sweep ({:?}) ==", t0.elapsed());
        println!("{:>12} {:>8} {:>8} {:>8} {:>8}  conv iter", "value", "CRRA", "FCR", "FRA", "MSR");
        for chunk in result.rows.chunks(4) {
            let v = chunk[0].value;
            print!("{v:>12.3e}");
            for row in chunk {
                print!(" {:>8.4}", row.avg_effective_accuracy);
            }
            print!("  {} {}", chunk[0].converged, chunk[0].iterations);
            if let Some(e) = chunk.iter().find_map(|r| r.error.as_ref()) {
                print!("  ERR {e}");
            }
            println!();
        }
        let crra: Vec<&crra_core::harness::SweepRow> =
            result.rows.iter().filter(|r| r.method == Method::Crra).collect();
        let msr: Vec<&crra_core::harness::SweepRow> =
            result.rows.iter().filter(|r| r.method == Method::Msr).collect();
        let gain = crra[0].avg_effective_accuracy / msr[0].avg_effective_accuracy - 1.0;
        println!("first-point CRRA/MSR gain: {:.1}%", gain * 100.0);
        if param == SweepParam::Bandwidth {
            let n = crra.len();
            let first_slope = crra[1].avg_effective_accuracy - crra[0].avg_effective_accuracy;
            let last_slope = crra[n-1].avg_effective_accuracy - crra[n-2].avg_effective_accuracy;
            println!("first slope {first_slope:.4}, last slope {last_slope:.4}, ratio {:.3}", last_slope/first_slope);
        }
    }
}
