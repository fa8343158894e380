"""WordPiece segmentation and fixed-length encoder inputs."""

from revsent.tokenizer import Vocab, encode, wordpiece_tokenize

vocab = Vocab(["[PAD]", "[UNK]", "[CLS]", "[SEP]", "main", "##nya", "##kan", "bagus", "apli", "##kasi", "me", "##main"])

for text in ["mainnya bagus", "aplikasi", "memainkan", "zzz"]:
    print(f"{text!r:16} -> {wordpiece_tokenize(text, vocab)}")

# [CLS] pieces [SEP], padded; the mask marks real tokens
e = encode("aplikasi bagus", vocab, max_len=8)
print("\nids ", e.ids.tolist())
print("mask", e.attention_mask.tolist())

# too long: the tail is cut but [SEP] survives
e = encode("bagus " * 20, vocab, max_len=6)
print("\ntruncated", [vocab.tokens[i] for i in e.ids])
