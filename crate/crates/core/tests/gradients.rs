//! Analytic gradients against central finite differences (h = 1e-5).

mod support;

use privgan_lab::numkit::Activation;
use proptest::prelude::*;
use support::{check, Head};

fn widths() -> impl Strategy<Value = (Vec<usize>, usize)> {
    (1usize..5, prop::collection::vec(1usize..6, 0..3), 1usize..4, 1usize..5).prop_map(|(inp, hidden, out, batch)| {
        let mut w = vec![inp];
        w.extend(hidden);
        w.push(out);
        (w, batch)
    })
}

macro_rules! grad_tests {
    ($($name:ident: $hidden:expr, $head:expr;)*) => {
        proptest! {
            #![proptest_config(ProptestConfig::with_cases(20))]
            $(
                #[test]
                fn $name(seed in any::<u64>(), (w, batch) in widths()) {
                    let head = $head;
                    // a single-output softmax is constant; two classes is the smallest meaningful case
                    let mut w = w;
                    if matches!(head, Head::SoftmaxCe) && *w.last().unwrap() < 2 {
                        *w.last_mut().unwrap() = 2;
                    }
                    check(seed, $hidden, head, w, batch);
                }
            )*
        }
    };
}

grad_tests! {
    leaky_sigmoid_bce: Activation::leaky(), Head::SigmoidBce;
    leaky_softmax_ce: Activation::leaky(), Head::SoftmaxCe;
    leaky_tanh_squared: Activation::leaky(), Head::TanhSquared;
    leaky_linear_squared: Activation::leaky(), Head::LinearSquared;
    leaky_leaky_squared: Activation::leaky(), Head::LeakySquared;
    tanh_sigmoid_bce: Activation::Tanh, Head::SigmoidBce;
    tanh_softmax_ce: Activation::Tanh, Head::SoftmaxCe;
    tanh_tanh_squared: Activation::Tanh, Head::TanhSquared;
    tanh_linear_squared: Activation::Tanh, Head::LinearSquared;
    tanh_leaky_squared: Activation::Tanh, Head::LeakySquared;
    linear_sigmoid_bce: Activation::Linear, Head::SigmoidBce;
    linear_softmax_ce: Activation::Linear, Head::SoftmaxCe;
    linear_tanh_squared: Activation::Linear, Head::TanhSquared;
    linear_linear_squared: Activation::Linear, Head::LinearSquared;
    linear_leaky_squared: Activation::Linear, Head::LeakySquared;
}
