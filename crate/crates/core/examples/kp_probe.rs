use heatchain::polymer::kp::{kp_check, CertificateParams};

fn main() {
    for t in [1e-3, 1e-4] {
        for lam in [4e3, 2e4, 1e5, 5e5, 2.5e6, 1e8] {
            let params = CertificateParams {
                zeta: 10.0,
                m: 75.0,
                lambda: lam,
                t_min: t,
                t_max: t,
                j_amp: 0.1,
                p_exp: 2.0,
                c1: -1.0 / 6.0,
                kp_a: 1.0,
            };
            match kp_check(&params) {
                Ok(c) => println!(
                    "T={t:.0e} lam={lam:.1e}: K={:.3e} paper_eps={:.3e} cert_eps={:.3e} lhs={:.3e} pass={} reason={:?} w0={:.3e} w={:.3e} Rtot={:.3e}",
                    c.k_max, c.paper_epsilon, c.epsilon_certified, c.kp_lhs, c.pass, c.fail_reason, c.vertex_w0, c.vertex_w, c.row_sum_total
                ),
                Err(e) => println!("T={t:.0e} lam={lam:.1e}: error {e}"),
            }
        }
    }
}
