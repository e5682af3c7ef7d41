"""Check analytic gradients against central finite differences.

First a single primitive through a random linear readout, then every
parameter of a two-layer encoder in one sweep. The key bias is the one
deliberate exception: shifting all scores in a softmax row changes nothing,
so its true gradient is identically zero and finite differences would only
compare rounding noise.
"""

import numpy as np

from nanobert import numerics as nn
from nanobert.model import (ModelConfig, encoder_backward,
                            encoder_forward_with_cache, param_shapes)
from nanobert.rng import Rng

rng = Rng(0)

x = rng.spawn("x").normal((3, 4))
w = rng.spawn("w").normal((3, 4))
report = nn.grad_check(
    lambda t: (float(np.sum(nn.gelu(t) * w)), nn.gelu_backward(w, t)),
    x, name="gelu.x")
print(f"{report.name}: max rel error {report.max_rel_error:.2e} "
      f"(tol {report.tolerance:g})")

cfg = ModelConfig(num_layers=2, hidden_size=8, num_heads=2, ffn_size=16,
                  vocab_size=30, max_positions=12, dropout=0.0)

# at the 0.02 init scale the attention-score gradients are so small that
# finite differences see mostly rounding noise, so sample at a working scale
params = {}
for name, shape in sorted(param_shapes(cfg).items()):
    r = rng.spawn("theta", name)
    params[name] = 1.0 + r.normal(shape, 0.2) if name.endswith("gamma") \
        else r.normal(shape, 0.4)
ids = rng.spawn("ids").integers(cfg.vocab_size, (2, 6))
mask = np.ones((2, 6))
mask[1, 4:] = 0.0
readout = rng.spawn("readout").normal((2, 6, cfg.hidden_size))


def loss_for(name):
    def f(theta):
        params[name] = theta
        h, cache = encoder_forward_with_cache(cfg, params, ids, mask)
        grads = encoder_backward(cfg, params, cache, readout)
        return float(np.sum(h * readout)), grads[name]
    return f


print(f"\nsweeping {len(params) - 1} encoder parameters:")
for name in sorted(params):
    if name == "mlm_bias":
        continue  # belongs to the pretraining loss, not the encoder
    f = loss_for(name)
    if name.endswith("attn.bk"):
        _, g = f(params[name])
        print(f"  {name:22s} analytic zero, |grad| max {np.abs(g).max():.1e}")
        continue
    report = nn.grad_check(f, params[name].copy(), name=name, n_coords=4,
                           rng=rng.spawn("coords", name))
    flag = "" if report.passed else "  <-- FAIL"
    print(f"  {name:22s} {report.max_rel_error:.2e}{flag}")
