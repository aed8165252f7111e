#include "pass/model.hpp"

namespace pass {

EncoderConfig EncoderConfig::desk(int vocab_size, int num_classes) {
    EncoderConfig c;
    c.vocab_size = vocab_size;
    c.d_model = 64;
    c.heads = 4;
    c.d_head = 16;
    c.ffn_dim = 128;
    c.n_blocks = 2;
    c.max_len = 34;
    c.num_classes = num_classes;
    return c;
}

void EncoderConfig::validate() const {
    auto fail = [](const std::string& what) { throw UsageError("invalid encoder config: " + what); };
    if (vocab_size < special_count()) fail("vocab_size below the special token count");
    if (heads <= 0 || d_head <= 0) fail("heads and d_head must be positive");
    if (d_model != heads * d_head) fail("d_model must equal heads * d_head");
    if (ffn_dim <= 0 || n_blocks < 0 || max_len <= 0 || proj_dim <= 0) fail("non-positive dimension");
    if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
    if (num_classes < 0 || num_classes == 1) fail("num_classes must be 0 or at least 2");
}

}  // namespace pass
