#include "htsr/kernels.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

namespace htsr {
namespace detail {

using ParamRef = std::pair<std::string, Hyperparameter*>;

struct KernelNode {
    virtual ~KernelNode() = default;
    virtual std::unique_ptr<KernelNode> clone() const = 0;
    virtual double eval(double x, double x2) const = 0;
    // Writes d eval / d log θ for this subtree's free params, returns eval.
    virtual double eval_grad(double x, double x2, double* grad) const = 0;
    virtual void collect(const std::string& prefix, std::vector<ParamRef>& out) = 0;
    virtual std::string str() const = 0;
};

namespace {

void check_param(const std::string& name, const Hyperparameter& p) {
    if (!(p.value > 0.0)) {
        throw ContractError("hyperparameter " + name + " must be strictly positive");
    }
    if (p.value < p.lower || p.value > p.upper) {
        throw ContractError("hyperparameter " + name + " outside its bounds");
    }
}

int count_free(const Hyperparameter& p) { return p.fixed ? 0 : 1; }

std::string fmt_param(const Hyperparameter& p) {
    std::ostringstream s;
    if (p.fixed) {
        s << "fixed(" << p.value << ")";
    } else {
        s << p.value;
    }
    return s.str();
}

struct RbfNode final : KernelNode {
    Hyperparameter sigma2, length;

    RbfNode(Hyperparameter s2, Hyperparameter l) : sigma2(s2), length(l) {
        check_param("rbf.sigma2", sigma2);
        check_param("rbf.ell", length);
    }

    std::unique_ptr<KernelNode> clone() const override {
        return std::make_unique<RbfNode>(*this);
    }

    double eval(double x, double x2) const override {
        double d = x - x2;
        return sigma2.value * std::exp(-d * d / (2.0 * length.value * length.value));
    }

    double eval_grad(double x, double x2, double* grad) const override {
        double d = x - x2;
        double l2 = length.value * length.value;
        double k = sigma2.value * std::exp(-d * d / (2.0 * l2));
        int at = 0;
        if (!sigma2.fixed) grad[at++] = k;
        if (!length.fixed) grad[at++] = k * d * d / l2;
        return k;
    }

    void collect(const std::string& prefix, std::vector<ParamRef>& out) override {
        out.emplace_back(prefix + "rbf.sigma2", &sigma2);
        out.emplace_back(prefix + "rbf.ell", &length);
    }

    std::string str() const override {
        return "rbf(sigma2=" + fmt_param(sigma2) + ",ell=" + fmt_param(length) + ")";
    }
};

struct PeriodicNode final : KernelNode {
    Hyperparameter sigma2, length, period;

    PeriodicNode(Hyperparameter s2, Hyperparameter l, Hyperparameter p)
        : sigma2(s2), length(l), period(p) {
        check_param("periodic.sigma2", sigma2);
        check_param("periodic.ell", length);
        check_param("periodic.p", period);
    }

    std::unique_ptr<KernelNode> clone() const override {
        return std::make_unique<PeriodicNode>(*this);
    }

    double eval(double x, double x2) const override {
        double d = std::abs(x - x2);
        double s = std::sin(std::numbers::pi * d / period.value);
        return sigma2.value *
               std::exp(-2.0 * s * s / (length.value * length.value));
    }

    double eval_grad(double x, double x2, double* grad) const override {
        double d = std::abs(x - x2);
        double l2 = length.value * length.value;
        double arg = std::numbers::pi * d / period.value;
        double s = std::sin(arg);
        double k = sigma2.value * std::exp(-2.0 * s * s / l2);
        int at = 0;
        if (!sigma2.fixed) grad[at++] = k;
        if (!length.fixed) grad[at++] = k * 4.0 * s * s / l2;
        if (!period.fixed) {
            grad[at++] = k * 4.0 * arg * s * std::cos(arg) / l2;
        }
        return k;
    }

    void collect(const std::string& prefix, std::vector<ParamRef>& out) override {
        out.emplace_back(prefix + "periodic.sigma2", &sigma2);
        out.emplace_back(prefix + "periodic.ell", &length);
        out.emplace_back(prefix + "periodic.p", &period);
    }

    std::string str() const override {
        return "periodic(sigma2=" + fmt_param(sigma2) + ",ell=" + fmt_param(length) +
               ",p=" + fmt_param(period) + ")";
    }
};

struct LinearNode final : KernelNode {
    Hyperparameter sigma2;

    explicit LinearNode(Hyperparameter s2) : sigma2(s2) {
        check_param("linear.sigma2", sigma2);
    }

    std::unique_ptr<KernelNode> clone() const override {
        return std::make_unique<LinearNode>(*this);
    }

    double eval(double x, double x2) const override { return sigma2.value * x * x2; }

    double eval_grad(double x, double x2, double* grad) const override {
        double k = sigma2.value * x * x2;
        if (!sigma2.fixed) grad[0] = k;
        return k;
    }

    void collect(const std::string& prefix, std::vector<ParamRef>& out) override {
        out.emplace_back(prefix + "linear.sigma2", &sigma2);
    }

    std::string str() const override {
        return "linear(sigma2=" + fmt_param(sigma2) + ")";
    }
};

struct BinaryNode : KernelNode {
    std::unique_ptr<KernelNode> left, right;
    int left_free = 0;
    int right_free = 0;

    BinaryNode(std::unique_ptr<KernelNode> l, std::unique_ptr<KernelNode> r)
        : left(std::move(l)), right(std::move(r)) {
        std::vector<ParamRef> refs;
        left->collect("", refs);
        for (auto& [name, p] : refs) left_free += count_free(*p);
        refs.clear();
        right->collect("", refs);
        for (auto& [name, p] : refs) right_free += count_free(*p);
    }
};

struct SumNode final : BinaryNode {
    using BinaryNode::BinaryNode;

    std::unique_ptr<KernelNode> clone() const override {
        return std::make_unique<SumNode>(left->clone(), right->clone());
    }

    double eval(double x, double x2) const override {
        return left->eval(x, x2) + right->eval(x, x2);
    }

    double eval_grad(double x, double x2, double* grad) const override {
        double a = left->eval_grad(x, x2, grad);
        double b = right->eval_grad(x, x2, grad + left_free);
        return a + b;
    }

    void collect(const std::string& prefix, std::vector<ParamRef>& out) override {
        left->collect(prefix + "sum.l.", out);
        right->collect(prefix + "sum.r.", out);
    }

    std::string str() const override {
        return "sum(" + left->str() + "," + right->str() + ")";
    }
};

struct ProductNode final : BinaryNode {
    using BinaryNode::BinaryNode;

    std::unique_ptr<KernelNode> clone() const override {
        return std::make_unique<ProductNode>(left->clone(), right->clone());
    }

    double eval(double x, double x2) const override {
        return left->eval(x, x2) * right->eval(x, x2);
    }

    double eval_grad(double x, double x2, double* grad) const override {
        double a = left->eval_grad(x, x2, grad);
        double* rg = grad + left_free;
        double b = right->eval_grad(x, x2, rg);
        for (int i = 0; i < left_free; ++i) grad[i] *= b;
        for (int i = 0; i < right_free; ++i) rg[i] *= a;
        return a * b;
    }

    void collect(const std::string& prefix, std::vector<ParamRef>& out) override {
        left->collect(prefix + "prod.l.", out);
        right->collect(prefix + "prod.r.", out);
    }

    std::string str() const override {
        return "product(" + left->str() + "," + right->str() + ")";
    }
};

}  // namespace
}  // namespace detail

Kernel::Kernel(std::unique_ptr<detail::KernelNode> node) : node_(std::move(node)) {}
Kernel::~Kernel() = default;
Kernel::Kernel(Kernel&&) noexcept = default;
Kernel& Kernel::operator=(Kernel&&) noexcept = default;
Kernel::Kernel(const Kernel& other) : node_(other.node_->clone()) {}
Kernel& Kernel::operator=(const Kernel& other) {
    if (this != &other) node_ = other.node_->clone();
    return *this;
}

Kernel Kernel::rbf(Hyperparameter sigma2, Hyperparameter length) {
    return Kernel(std::make_unique<detail::RbfNode>(sigma2, length));
}
Kernel Kernel::periodic(Hyperparameter sigma2, Hyperparameter length,
                        Hyperparameter period) {
    return Kernel(std::make_unique<detail::PeriodicNode>(sigma2, length, period));
}
Kernel Kernel::linear(Hyperparameter sigma2) {
    return Kernel(std::make_unique<detail::LinearNode>(sigma2));
}
Kernel Kernel::sum(Kernel left, Kernel right) {
    return Kernel(std::make_unique<detail::SumNode>(std::move(left.node_),
                                                    std::move(right.node_)));
}
Kernel Kernel::product(Kernel left, Kernel right) {
    return Kernel(std::make_unique<detail::ProductNode>(std::move(left.node_),
                                                        std::move(right.node_)));
}

double Kernel::eval(double x, double x2) const { return node_->eval(x, x2); }

double Kernel::eval_with_grad(double x, double x2, double* grad) const {
    return node_->eval_grad(x, x2, grad);
}

Eigen::MatrixXd Kernel::gram(const Eigen::VectorXd& xs) const {
    const Eigen::Index t = xs.size();
    if (t == 0) throw ContractError("gram: empty input vector");
    Eigen::MatrixXd g(t, t);
    for (Eigen::Index i = 0; i < t; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            double v = node_->eval(xs(i), xs(j));
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

void Kernel::gram_with_grads(const Eigen::VectorXd& xs, Eigen::MatrixXd& gram_out,
                             std::vector<Eigen::MatrixXd>& grads_out) const {
    const Eigen::Index t = xs.size();
    const int nf = n_free();
    gram_out.resize(t, t);
    grads_out.assign(static_cast<std::size_t>(nf), Eigen::MatrixXd(t, t));
    std::vector<double> buf(static_cast<std::size_t>(nf));
    for (Eigen::Index i = 0; i < t; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            double v = node_->eval_grad(xs(i), xs(j), buf.data());
            gram_out(i, j) = gram_out(j, i) = v;
            for (int p = 0; p < nf; ++p) {
                grads_out[static_cast<std::size_t>(p)](i, j) = buf[static_cast<std::size_t>(p)];
                grads_out[static_cast<std::size_t>(p)](j, i) = buf[static_cast<std::size_t>(p)];
            }
        }
    }
}

namespace {
std::vector<detail::ParamRef> free_refs(detail::KernelNode& node) {
    std::vector<detail::ParamRef> all;
    node.collect("", all);
    std::vector<detail::ParamRef> free;
    for (auto& r : all) {
        if (!r.second->fixed) free.push_back(r);
    }
    return free;
}
}  // namespace

int Kernel::n_free() const {
    return static_cast<int>(free_refs(*node_).size());
}

std::vector<std::string> Kernel::free_names() const {
    std::vector<std::string> names;
    for (auto& [name, p] : free_refs(*node_)) names.push_back(name);
    return names;
}

Eigen::VectorXd Kernel::pack_log() const {
    auto refs = free_refs(*node_);
    Eigen::VectorXd v(static_cast<Eigen::Index>(refs.size()));
    for (std::size_t i = 0; i < refs.size(); ++i) v(static_cast<Eigen::Index>(i)) = std::log(refs[i].second->value);
    return v;
}

void Kernel::unpack_log(const Eigen::VectorXd& log_values) {
    auto refs = free_refs(*node_);
    if (log_values.size() != static_cast<Eigen::Index>(refs.size())) {
        throw ContractError("unpack_log: wrong number of hyperparameters");
    }
    for (std::size_t i = 0; i < refs.size(); ++i) {
        Hyperparameter* p = refs[i].second;
        double v = std::exp(log_values(static_cast<Eigen::Index>(i)));
        if (v < p->lower || v > p->upper) {
            throw ContractError("unpack_log: " + refs[i].first + " outside bounds");
        }
        p->value = v;
    }
}

Eigen::VectorXd Kernel::lower_log() const {
    auto refs = free_refs(*node_);
    Eigen::VectorXd v(static_cast<Eigen::Index>(refs.size()));
    for (std::size_t i = 0; i < refs.size(); ++i) v(static_cast<Eigen::Index>(i)) = std::log(refs[i].second->lower);
    return v;
}

Eigen::VectorXd Kernel::upper_log() const {
    auto refs = free_refs(*node_);
    Eigen::VectorXd v(static_cast<Eigen::Index>(refs.size()));
    for (std::size_t i = 0; i < refs.size(); ++i) v(static_cast<Eigen::Index>(i)) = std::log(refs[i].second->upper);
    return v;
}

std::string Kernel::to_string() const { return node_->str(); }

// ---------------------------------------------------------------------------
// Expression parser

namespace {

struct Parser {
    std::string_view src;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < src.size() && src[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!eat(c)) {
            throw ParseError("kernel expression: expected '" + std::string(1, c) +
                             "' at offset " + std::to_string(pos));
        }
    }

    char peek() {
        skip_ws();
        return pos < src.size() ? src[pos] : '\0';
    }

    std::string ident() {
        skip_ws();
        std::size_t start = pos;
        while (pos < src.size() &&
               (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_')) {
            ++pos;
        }
        if (start == pos) {
            throw ParseError("kernel expression: expected identifier at offset " +
                             std::to_string(pos));
        }
        return std::string(src.substr(start, pos - start));
    }

    double number() {
        skip_ws();
        std::size_t start = pos;
        while (pos < src.size() &&
               (std::isdigit(static_cast<unsigned char>(src[pos])) || src[pos] == '.' ||
                src[pos] == '-' || src[pos] == '+' || src[pos] == 'e' || src[pos] == 'E')) {
            ++pos;
        }
        try {
            return std::stod(std::string(src.substr(start, pos - start)));
        } catch (const std::exception&) {
            throw ParseError("kernel expression: expected number at offset " +
                             std::to_string(start));
        }
    }

    Hyperparameter param_spec() {
        skip_ws();
        if (std::isalpha(static_cast<unsigned char>(peek()))) {
            std::string kind = ident();
            expect('(');
            if (kind == "fixed") {
                double v = number();
                expect(')');
                return Hyperparameter::fixed_at(v);
            }
            if (kind == "bounds") {
                double lo = number();
                expect(',');
                double hi = number();
                double init = std::sqrt(lo * hi);
                if (eat(',')) init = number();
                expect(')');
                if (!(lo > 0.0) || hi < lo) {
                    throw ParseError("kernel expression: invalid bounds(" +
                                     std::to_string(lo) + "," + std::to_string(hi) + ")");
                }
                return Hyperparameter::bounded(lo, hi, init);
            }
            throw ParseError("kernel expression: unknown param spec '" + kind + "'");
        }
        Hyperparameter p;
        p.value = number();
        return p;
    }

    Kernel kernel() {
        std::string name = ident();
        expect('(');
        if (name == "sum" || name == "product") {
            Kernel left = kernel();
            expect(',');
            Kernel result = name == "sum" ? Kernel::sum(std::move(left), kernel())
                                          : Kernel::product(std::move(left), kernel());
            while (eat(',')) {
                result = name == "sum" ? Kernel::sum(std::move(result), kernel())
                                       : Kernel::product(std::move(result), kernel());
            }
            expect(')');
            return result;
        }
        Hyperparameter sigma2, ell, p;
        if (peek() != ')') {
            do {
                std::string key = ident();
                expect('=');
                Hyperparameter spec = param_spec();
                if (key == "sigma2") {
                    sigma2 = spec;
                } else if (key == "ell") {
                    ell = spec;
                } else if (key == "p") {
                    p = spec;
                } else {
                    throw ParseError("kernel expression: unknown hyperparameter '" + key + "'");
                }
            } while (eat(','));
        }
        expect(')');
        if (name == "rbf") return Kernel::rbf(sigma2, ell);
        if (name == "periodic") return Kernel::periodic(sigma2, ell, p);
        if (name == "linear") return Kernel::linear(sigma2);
        throw ParseError("kernel expression: unknown kernel '" + name + "'");
    }
};

}  // namespace

Kernel parse_kernel(std::string_view expr) {
    Parser parser{expr};
    Kernel k = parser.kernel();
    parser.skip_ws();
    if (parser.pos != expr.size()) {
        throw ParseError("kernel expression: trailing characters at offset " +
                         std::to_string(parser.pos));
    }
    return k;
}

}  // namespace htsr
