use ptbp::decide::ef_reconf_decide;
use ptbp::textio::parse_protocol;

fn factory(pt: &str, tl: &str) -> ptbp::model::Protocol {
    let src = format!(
        "protocol factory\nloc q0 c f s1 s2 s3 g\nclocks x\nmessages f p\ninit q0\n\
         edge q0 -> c do recv f\nedge q0 -> f do send f reset x\nedge c -> s1 do recv p\n\
         edge s1 -> s2 do recv p\nedge s2 -> s3 do recv p\nedge s3 -> g when x < {tl}\n\
         edge f -> f when x >= {pt} do send p reset x\n"
    );
    parse_protocol(&src).unwrap()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let pt = args.get(1).map(String::as_str).unwrap_or("3");
    let tl = args.get(2).map(String::as_str).unwrap_or("9");
    let p = factory(pt, tl);
    let goal = p.loc_id("g").unwrap();
    let t0 = std::time::Instant::now();
    let (w, stats) = ef_reconf_decide(&p, goal).unwrap();
    println!(
        "factory({pt},{tl}): reachable={} n={:?} states={} basis={} in {:?}",
        w.is_some(),
        w.as_ref().map(|w| w.n),
        stats.states,
        stats.basis,
        t0.elapsed()
    );
}
