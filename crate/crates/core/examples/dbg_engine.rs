use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind = args.get(1).map(String::as_str).unwrap_or("grass_plane");
    let side: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(40.0);
    let strategy = args.get(3).map(String::as_str).unwrap_or("froshe");
    let robots: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(1);
    let seed: u64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(0);
    let density: f64 = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(0.05);
    let trace_every: usize = std::env::var("TRACE_EVERY")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);

    let cfg = froshe::config::SimConfig::from_toml_str(&format!(
        "strategy = \"{strategy}\"\n\
         [scenario]\nkind = \"{kind}\"\nside_length = {side}\nrobot_count = {robots}\ntree_density = {density}\n\
         [engine]\nmaster_seed = {seed}\n"
    ))
    .unwrap();
    let t0 = Instant::now();
    let dump = std::env::var("DUMP_TRACE").ok();
    let metrics = if let Some(dir) = &dump {
        let (metrics, trace) = froshe::engine::run_traced(&cfg).unwrap();
        std::fs::create_dir_all(dir).unwrap();
        std::fs::write(format!("{dir}/decisions.csv"), trace.decisions_csv()).unwrap();
        std::fs::write(format!("{dir}/monitors.csv"), trace.monitors_csv()).unwrap();
        metrics
    } else {
        froshe::engine::run(&cfg).unwrap()
    };
    let wall = t0.elapsed().as_secs_f64();
    let window: Option<(usize, usize)> = std::env::var("TRACE_WINDOW").ok().and_then(|s| {
        let (a, b) = s.split_once(':')?;
        Some((a.parse().ok()?, b.parse().ok()?))
    });
    if trace_every > 0 || window.is_some() {
        for row in metrics.ticks.iter() {
            let shown = match window {
                Some((lo, hi)) => (row.tick as usize) >= lo && (row.tick as usize) < hi,
                None => row.tick as usize % trace_every == 0,
            };
            if !shown {
                continue;
            }
            let poses: Vec<String> = row
                .robots
                .iter()
                .map(|r| format!("({:.3},{:.3},{})", r.x, r.y, r.mode))
                .collect();
            println!(
                "t={:7.1} explored={:6} frac={:.4} {}",
                row.time_s,
                row.explored_cells,
                row.explored_fraction,
                poses.join(" ")
            );
        }
    }
    let s = &metrics.summary;
    println!(
        "{kind} {side}m {strategy} r={robots} seed={seed}: completed={} t={:?} frac={:.4} dist={:?} switches={:?} wall={wall:.2}s",
        s.completed, s.completion_time_s, s.explored_fraction, s.distance_traveled_m, s.mode_switches
    );
}
