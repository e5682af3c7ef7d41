"""Train a byte-pair tokenizer on the bundled corpus and poke at it.

Shows the vocabulary layout (specials first, then single characters, then
merged pieces), an encode/decode round trip, and how unseen words fall back
to smaller pieces.
"""

from nanobert import datagen
from nanobert.tokenizer import train_bpe

corpus = datagen.pretrain_corpus(seed=11, target_chars=20_000)
tok = train_bpe([corpus], vocab_size=120)

print(f"corpus: {len(corpus)} chars, vocab size {tok.vocab_size}")
print("first 12 entries:", [tok.token_for_id(i) for i in range(12)])
print("last 8 entries:  ",
      [tok.token_for_id(i) for i in range(tok.vocab_size - 8, tok.vocab_size)])

sentence = " ".join(datagen.full_vocabulary()[:5])
ids = tok.encode_body(sentence)
print(f"\nencode {sentence!r}")
print("pieces:    ", [tok.token_for_id(i) for i in ids])
print("round trip:", tok.decode(ids))

# a word the merges never saw decomposes into characters (or unk)
ids = tok.encode_body("qxzzle")
print("\nunseen word 'qxzzle' ->", [tok.token_for_id(i) for i in ids])

enc = tok.encode(sentence, max_length=12)
print(f"\npadded encoding to 12 positions:\nids  {enc.ids}\nmask {enc.attention_mask}")
