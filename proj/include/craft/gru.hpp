#pragma once

#include <string>

#include "craft/params.hpp"
#include "craft/tape.hpp"

namespace craft {

// One GRU instance's parameter names, keyed by a prefix ("utt", "ctx", "dec").
inline const char* kGruGates[] = {"z", "r", "h"};

template <typename Real>
void add_gru_params(ParamStore<Real>& store, const std::string& prefix,
                    std::size_t input_dim, std::size_t hidden_dim, std::mt19937& rng,
                    Real init_range = Real(0.1)) {
    for (const char* g : kGruGates) {
        store.add(prefix + ".W" + g,
                  Mat<Real>::uniform(hidden_dim, input_dim, -init_range, init_range, rng));
        store.add(prefix + ".U" + g,
                  Mat<Real>::uniform(hidden_dim, hidden_dim, -init_range, init_range, rng));
        store.add(prefix + ".b" + g, Mat<Real>::zeros(hidden_dim, 1));
    }
}

// h' = (1-z) o h + z o tanh(Wh x + Uh (r o h) + bh)
// z  = sigmoid(Wz x + Uz h + bz), r = sigmoid(Wr x + Ur h + br)
template <typename Real>
typename Tape<Real>::Id gru_cell(Tape<Real>& tape, ParamStore<Real>& store,
                                 const std::string& prefix,
                                 typename Tape<Real>::Id x, typename Tape<Real>::Id h) {
    auto p = [&](const std::string& n) { return tape.param(store, prefix + "." + n); };
    auto z = tape.sigmoid(tape.add(tape.affine(p("Wz"), x, p("bz")), tape.matvec(p("Uz"), h)));
    auto r = tape.sigmoid(tape.add(tape.affine(p("Wr"), x, p("br")), tape.matvec(p("Ur"), h)));
    auto hcand = tape.tanh_(
        tape.add(tape.affine(p("Wh"), x, p("bh")), tape.matvec(p("Uh"), tape.mul(r, h))));
    return tape.add(tape.mul(tape.one_minus(z), h), tape.mul(z, hcand));
}

}  // namespace craft
