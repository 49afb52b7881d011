#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tailcast/common.hpp"
#include "tailcast/nn/network.hpp"
#include "tailcast/nn/ridge.hpp"

// Text model format, one token group per line:
//
//   tailcast-model 1
//   kind mlp | recurrent | ridge
//   layer dense <in> <out> <activation> <alpha>      (mlp, and the recurrent head)
//   layer lstm <in> <hidden> <activation>
//   layer bilstm <in> <hidden> <activation>
//   ridge <D> <P> <lambda>
//   params <count>
//   <one value per line, 17 significant digits>
//   end
//
// Parameter order: layers in sequence (the recurrent head last). Dense: weights
// then bias. LSTM: input weights, recurrent weights, bias, with gate blocks
// i, f, g, o stacked along rows. BiLSTM: forward LSTM then backward LSTM.
// Ridge: coefficients (P x D) then intercept. Every matrix is row-major.

namespace tailcast::nn {

namespace detail {

inline void write_matrix(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << format_double(m(i, j)) << '\n';
}

inline void write_params(std::ostream& out, const std::vector<const Matrix*>& mats) {
  std::size_t count = 0;
  for (const auto* m : mats) count += static_cast<std::size_t>(m->size());
  out << "params " << count << '\n';
  for (const auto* m : mats) write_matrix(out, *m);
  out << "end\n";
}

inline void dense_params(const Dense& d, std::vector<const Matrix*>& out) {
  out.push_back(&d.weights);
  out.push_back(&d.bias);
}

inline void lstm_params(const Lstm& l, std::vector<const Matrix*>& out) {
  out.push_back(&l.input_weights);
  out.push_back(&l.recurrent_weights);
  out.push_back(&l.bias);
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::vector<std::string> line() {
    std::string s;
    while (std::getline(in_, s)) {
      if (!s.empty() && s.back() == '\r') s.pop_back();
      if (s.empty()) continue;
      ++line_no_;
      std::istringstream ss(s);
      std::vector<std::string> tok;
      for (std::string t; ss >> t;) tok.push_back(t);
      return tok;
    }
    fail("unexpected end of file");
  }

  std::size_t to_size(const std::string& s) {
    auto v = parse_int(s);
    if (!v || *v < 0) fail("expected a non-negative integer, got '" + s + "'");
    return static_cast<std::size_t>(*v);
  }

  double to_double(const std::string& s) {
    auto v = parse_double(s);
    if (!v) fail("expected a number, got '" + s + "'");
    return *v;
  }

  void read_matrix(Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        auto tok = line();
        if (tok.size() != 1) fail("expected one value per line");
        m(i, j) = to_double(tok[0]);
      }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error("model file, line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

}  // namespace detail

inline void save(std::ostream& out, const Mlp& net) {
  out << "tailcast-model 1\nkind mlp\n";
  std::vector<const Matrix*> mats;
  for (const auto& d : net.layers()) {
    out << "layer dense " << d.input_dim() << ' ' << d.output_dim() << ' ' << to_string(d.activation) << ' '
        << format_double(d.alpha) << '\n';
    detail::dense_params(d, mats);
  }
  detail::write_params(out, mats);
}

inline void save(std::ostream& out, const RecurrentNet& net) {
  out << "tailcast-model 1\nkind recurrent\n";
  std::vector<const Matrix*> mats;
  for (const auto& layer : net.layers()) {
    if (const auto* l = std::get_if<Lstm>(&layer)) {
      out << "layer lstm " << l->input_dim() << ' ' << l->hidden_dim() << ' ' << to_string(l->activation) << '\n';
      detail::lstm_params(*l, mats);
    } else {
      const auto& b = std::get<BiLstm>(layer);
      out << "layer bilstm " << b.input_dim() << ' ' << b.hidden_dim() << ' '
          << to_string(b.forward_layer().activation) << '\n';
      detail::lstm_params(b.forward_layer(), mats);
      detail::lstm_params(b.backward_layer(), mats);
    }
  }
  const auto& h = net.head();
  out << "layer dense " << h.input_dim() << ' ' << h.output_dim() << ' ' << to_string(h.activation) << ' '
      << format_double(h.alpha) << '\n';
  detail::dense_params(h, mats);
  detail::write_params(out, mats);
}

inline void save(std::ostream& out, const RidgeModel& m) {
  out << "tailcast-model 1\nkind ridge\n";
  out << "ridge " << m.window() << ' ' << m.horizon() << ' ' << format_double(m.lambda) << '\n';
  detail::write_params(out, {&m.coefficients, &m.intercept});
}

/// Any model the format can hold.
using SavedModel = std::variant<Mlp, RecurrentNet, RidgeModel>;

inline SavedModel load(std::istream& in) {
  detail::Reader r(in);
  auto head = r.line();
  if (head.size() != 2 || head[0] != "tailcast-model" || head[1] != "1") r.fail("not a tailcast model file");
  auto kind = r.line();
  if (kind.size() != 2 || kind[0] != "kind") r.fail("missing kind line");

  std::vector<Dense> dense;
  std::vector<RecurrentLayer> recurrent;
  std::optional<RidgeModel> ridge;
  std::vector<std::string> tok;
  for (tok = r.line(); tok.at(0) != "params"; tok = r.line()) {
    if (tok[0] == "layer" && tok.size() == 6 && tok[1] == "dense") {
      dense.emplace_back(r.to_size(tok[2]), r.to_size(tok[3]), parse_activation(tok[4]), r.to_double(tok[5]));
    } else if (tok[0] == "layer" && tok.size() == 5 && tok[1] == "lstm") {
      recurrent.emplace_back(Lstm(r.to_size(tok[2]), r.to_size(tok[3]), parse_activation(tok[4])));
    } else if (tok[0] == "layer" && tok.size() == 5 && tok[1] == "bilstm") {
      recurrent.emplace_back(BiLstm(r.to_size(tok[2]), r.to_size(tok[3]), parse_activation(tok[4])));
    } else if (tok[0] == "ridge" && tok.size() == 4) {
      RidgeModel m;
      m.coefficients = Matrix::Zero(static_cast<Eigen::Index>(r.to_size(tok[2])),
                                    static_cast<Eigen::Index>(r.to_size(tok[1])));
      m.intercept = Matrix::Zero(m.coefficients.rows(), 1);
      m.lambda = r.to_double(tok[3]);
      ridge = std::move(m);
    } else {
      r.fail("unrecognised line starting with '" + tok[0] + "'");
    }
  }
  if (tok.size() != 2) r.fail("malformed params line");
  const std::size_t count = r.to_size(tok[1]);

  auto read_all = [&](std::vector<Matrix*> mats) {
    std::size_t expected = 0;
    for (auto* m : mats) expected += static_cast<std::size_t>(m->size());
    if (expected != count)
      r.fail("params count " + std::to_string(count) + " does not match layer specs (" + std::to_string(expected) + ")");
    for (auto* m : mats) r.read_matrix(*m);
    auto end = r.line();
    if (end.size() != 1 || end[0] != "end") r.fail("missing end marker");
  };
  auto lstm_mats = [](Lstm& l, std::vector<Matrix*>& out) {
    out.push_back(&l.input_weights);
    out.push_back(&l.recurrent_weights);
    out.push_back(&l.bias);
  };

  if (kind[1] == "mlp") {
    Mlp net(std::move(dense));
    std::vector<Matrix*> mats;
    for (auto& d : net.layers()) {
      mats.push_back(&d.weights);
      mats.push_back(&d.bias);
    }
    read_all(mats);
    return net;
  }
  if (kind[1] == "recurrent") {
    if (dense.size() != 1) r.fail("recurrent model needs exactly one dense head");
    RecurrentNet net(std::move(recurrent), std::move(dense.front()));
    std::vector<Matrix*> mats;
    for (auto& layer : net.layers()) {
      if (auto* l = std::get_if<Lstm>(&layer)) {
        lstm_mats(*l, mats);
      } else {
        auto& b = std::get<BiLstm>(layer);
        lstm_mats(b.forward_layer(), mats);
        lstm_mats(b.backward_layer(), mats);
      }
    }
    mats.push_back(&net.head().weights);
    mats.push_back(&net.head().bias);
    read_all(mats);
    return net;
  }
  if (kind[1] == "ridge") {
    if (!ridge) r.fail("ridge model without a ridge line");
    read_all({&ridge->coefficients, &ridge->intercept});
    return *ridge;
  }
  r.fail("unknown model kind '" + kind[1] + "'");
}

template <typename Model>
void save_file(const std::string& path, const Model& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file '" + path + "'");
  save(out, m);
}

inline SavedModel load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file '" + path + "'");
  return load(in);
}

}  // namespace tailcast::nn
