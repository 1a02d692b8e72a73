// quick probe of the degree-2 |y-b| problem via the public API
fn main() {

    for k in [2u32, 3, 4, 5] {
        match dpaudit_core::poly::shifted_relu_approx(0.5, k) {
            Ok(p) => println!("K={k}: sup={:.6e} coeffs={:?}", p.sup_error, p.coeffs),
            Err(e) => println!("K={k}: ERR {e}"),
        }
    }
}
