"""Pretrain a small masked-token model and watch the dev loss fall.

An untrained model guesses uniformly over the vocabulary, so its loss sits
at ln V; a few epochs on the bundled corpus cut that roughly in half.
Takes about half a minute on one core.
"""

import math

from nanobert import datagen
from nanobert.model import ModelConfig
from nanobert.optim import TrainingConfig
from nanobert.pretrain import run_pretraining
from nanobert.tokenizer import train_bpe

corpus = datagen.pretrain_corpus(seed=11, target_chars=30_000)
tok = train_bpe([corpus], vocab_size=200)
print(f"{len(corpus)} chars, vocab {tok.vocab_size}, "
      f"ln V = {math.log(tok.vocab_size):.3f}")

cfg = ModelConfig(num_layers=2, hidden_size=32, num_heads=2, ffn_size=64,
                  vocab_size=tok.vocab_size, max_positions=16, dropout=0.0)
tc = TrainingConfig(num_train_epochs=4, train_batch_size=8, eval_batch_size=128,
                    learning_rate=1e-3, warmup_steps=50, logging_steps=100,
                    max_length=16, seed=11)
res = run_pretraining(tc, corpus, tok, cfg)

print("\ndev loss by epoch (0 = untrained):")
for epoch, loss in enumerate(res.dev_losses):
    bar = "#" * round(40 * loss / res.dev_losses[0])
    print(f"  {epoch}  {loss:6.3f}  {bar}")
print(f"\nbest epoch: {res.best_epoch}"
      + ("  (stopped early)" if res.stopped_early else ""))
