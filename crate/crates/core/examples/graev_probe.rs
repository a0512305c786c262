use dhilbert::numtheory;
use dhilbert::polynomial::Polynomial;

fn is_prime(n: u64) -> bool {
    if n < 2 { return false; }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 { return false; }
        d += 1;
    }
    true
}

fn main() {
    let p = Polynomial::parse("t1^2*t2").unwrap();
    let mut out = String::from("q,a,avg\n");
    for q in 2..=199u64 {
        if !is_prime(q) { continue; }
        let avg = numtheory::gauss_fiber_average(&p, 10, 1, q);
        out.push_str(&format!("{q},1,{avg:.12e}\n"));
    }
    std::fs::write("crates/core/tests/fixtures/gauss_decay_t1sq_t2.csv", out).unwrap();
    println!("fixture written");
}
