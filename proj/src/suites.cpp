#include "racing_sr/suites.hpp"

#include <stdexcept>

namespace racing_sr {

namespace {

constexpr std::string_view kTrigOps = "+,-,*,sin,cos";
constexpr std::string_view kFullOps = "+,-,*,/,sin,cos,log,exp,sqrt";

struct Row {
    const char* id;
    const char* expression;
};

std::vector<BenchmarkSpec> build(std::string_view prefix, std::size_t n, std::string_view ops, Interval range,
                                 std::initializer_list<Row> rows) {
    std::vector<BenchmarkSpec> out;
    for (const Row& r : rows) {
        out.push_back(make_benchmark(std::string(prefix) + r.id, n, r.expression, ops,
                                     std::vector<Interval>(n, range)));
    }
    return out;
}

std::vector<BenchmarkSpec> trig_3_2_2() {
    return build("trig-3-2-2-", 3, kTrigOps, {-5.0, 5.0},
                 {
                     {"1", "0.6098*x1*sin(x0) + 0.66*x2 - 0.5542*sin(x2)*cos(x1) - 0.5932*cos(x0) + 0.1835"},
                     {"2", "0.9272*x0*cos(x1) - 0.8311*x0 - 0.7951*x1 + 0.5114*cos(x1)*cos(x2) - 0.8436"},
                     {"3", "-0.0951*x0*x2 + 0.0127*x2*sin(x1) - 0.5768*x2 - 0.2143*cos(x0) - 0.6254"},
                     {"4", "-0.3162*x0*x2 - 0.6406*x1*x2 - 0.802*x1 + 0.3979*cos(x0) + 0.0068"},
                     {"5", "0.7774*x0 - 0.5646*x1*sin(x0) - 0.8781*x2 + 0.7823*sin(x2)*cos(x1) + 0.4612"},
                     {"6", "-0.0999*x0*sin(x1) - 0.4304*x0*cos(x2) + 0.5153*x1 - 0.6365*cos(x0) - 0.1823"},
                     {"7", "0.6162*x0*x1 - 0.8577*x2*sin(x0) - 0.8295*x2 + 0.3185*sin(x1) - 0.0956"},
                     {"8", "0.7621*x0*x1 - 0.5348*x1 - 0.8292*x2 + 0.4458*sin(x2)*cos(x1) + 0.2351"},
                     {"9", "0.4681*x0 + 0.4856*x1*x2 - 0.8895*x2*sin(x0) - 0.6741*cos(x1) - 0.8204"},
                     {"10", "-0.4634*x0*sin(x2) - 0.7682*x2 - 0.4991*sin(x1)*cos(x2) + 0.1834*sin(x1) + 0.3475"},
                 });
}

std::vector<BenchmarkSpec> trig_4_4_6() {
    return build("trig-4-4-6-", 4, kTrigOps, {-5.0, 5.0},
                 {
                     {"1", "0.0424*x1*x2 - 0.7582*x1 + 0.9181*x2*x3 - 0.587*x2*cos(x0) + 0.2988*x2 - 0.9579*x3"
                           " + 0.2076*sin(x0)*cos(x1) + 0.0865*sin(x0) + 0.9965*sin(x1)*cos(x3)"
                           " + 0.8622*cos(x0)*cos(x3) + 0.124"},
                     {"2", "0.5998*x0*x1 + 0.5148*x0*x2 + 0.0606*x0*x3 + 0.1105*x1*x3 - 0.8742*x1 - 0.8527*x2*x3"
                           " - 0.0896*x2*sin(x1) + 0.2811*x2 + 0.8264*sin(x0) + 0.0406*sin(x3) + 0.4854"},
                     {"3", "-0.9296*x0 + 0.6272*x1*sin(x0) + 0.4468*x2*x3 + 0.7135*sin(x0)*cos(x3) + 0.6816*sin(x2)"
                           " - 0.9374*sin(x3)*cos(x1) - 0.5579*sin(x3) - 0.5481*cos(x0)*cos(x2)"
                           " - 0.837*cos(x1)*cos(x2) - 0.3081*cos(x1) - 0.1092"},
                     {"4", "-0.802*x0*x1 - 0.4736*x0*x2 + 0.8366*x0*sin(x3) - 0.7204*x1*cos(x2) + 0.5086*x2*x3"
                           " - 0.9419*x2 - 0.8707*x3*cos(x1) + 0.5934*sin(x0) - 0.1084*sin(x1) + 0.6729*sin(x3)"
                           " + 0.0363"},
                     {"5", "0.3847*x0*x3 - 0.904*x1*sin(x0) - 0.3458*x1*sin(x2) + 0.2652*x1*cos(x3) + 0.9379*x1"
                           " - 0.0158*x2*cos(x0) - 0.0119*x2 - 0.6445*x3*sin(x2) - 0.7881*x3 + 0.1602*sin(x0)"
                           " + 0.0368"},
                     {"6", "0.1068*x0*cos(x1) - 0.9693*x0*cos(x2) + 0.7863*x1*x3 - 0.8555*x1 - 0.2549*x3*sin(x0)"
                           " + 0.3453*sin(x0) + 0.2202*sin(x1)*cos(x2) + 0.7538*sin(x2)*cos(x3) + 0.2688*sin(x3)"
                           " - 0.6707*cos(x2) + 0.1723"},
                     {"7", "-0.6762*x0*x1 - 0.4155*x0*sin(x3) + 0.3426*x1*x3 - 0.4999*x1 - 0.7566*x2*x3"
                           " + 0.666*x2*sin(x1) - 0.7283*x2 + 0.5425*sin(x0)*sin(x2) - 0.3538*cos(x0)"
                           " - 0.1851*cos(x3) + 0.8117"},
                     {"8", "0.5062*x0*x2 - 0.652*x0*sin(x3) + 0.9153*x1*x3 - 0.7422*x1 + 0.0369*x2 - 0.2263*x3"
                           " - 0.7665*sin(x0) - 0.5118*sin(x1)*cos(x2) - 0.7336*sin(x3)*cos(x2)"
                           " - 0.1184*cos(x0)*cos(x1) + 0.4495"},
                     {"9", "-0.7331*x0*x1 + 0.7149*x0*x3 - 0.937*x0*sin(x2) - 0.8632*x1 + 0.5757*x3"
                           " + 0.7605*sin(x0) + 0.3964*sin(x1)*sin(x3) + 0.3957*sin(x2)*cos(x1)"
                           " + 0.5416*sin(x2)*cos(x3) + 0.7617*sin(x2) + 0.8487"},
                     {"10", "-0.1888*x0*sin(x2) - 0.7688*x0 - 0.1821*x1*x3 + 0.7518*x1*cos(x0) - 0.7683*x1*cos(x2)"
                            " - 0.3029*x1 + 0.5322*x2*x3 - 0.5291*sin(x0)*cos(x3) - 0.3467*sin(x2)"
                            " + 0.9045*sin(x3) - 0.8584"},
                 });
}

// Powers are spelled as products and leading negations as -1 factors or
// reordered terms; the grammar has neither pow nor unary minus on variables.
std::vector<BenchmarkSpec> livermore2_n4() {
    return build("Vars4-", 4, kFullOps, {0.01, 10.0},
                 {
                     {"1", "x0 - x1*x2 - x1 - 3*x3"},
                     {"2", "sqrt(2)*x0*sqrt(x1)*x3/x2 + 1"},
                     {"3", "2*x0 + x3 - 0.01 + x2/x1"},
                     {"4", "x0 - x3 - (sin(x0) - x0)*(sin(x0) - x0)/(x0*x0*x1*x1*x2*x2)"},
                     {"5", "x0 + sin(x1/(x0*x1*x1*x3*x3*(-3.22*x1*x3*x3 + 13.91*x1*x3 + x2)/2 + x1))"
                           "*sin(x1/(x0*x1*x1*x3*x3*(-3.22*x1*x3*x3 + 13.91*x1*x3 + x2)/2 + x1))"},
                     {"6", "exp(-2*x0)*cos(x1)/x2 - x0 - 0.54*sqrt(x3)*exp(x0)"},
                     {"7", "x0 + x2 + x3 + cos(x1)/log(x1*x1 + 1)"},
                     {"8", "x0*(x0 + x3 + sin((x1 - x0*exp(x2))/(-4.47*x0*x0*x2 + 8.31*x2*x2*x2 + 5.27*x2*x2))) - x0"},
                     {"9", "x0 - x3 + cos(x0*(x0 + x1)*(x0*x0*x1 + x2) + x2)"},
                     {"10", "x0*(x3 + (sqrt(x1) - sin(x2))/x2) + x0"},
                     {"11", "2*x0 + x1*(x0 + sin(x1*x2)) + sin(2/x3)"},
                     {"12", "x0*x1 + 16.97*x2 - x3"},
                     {"13", "-1*x3*(x2 + sin(x0*x0 - x0 + x1))"},
                     {"14", "x0 + cos(x1*x1*(x2 - x1 + 3.23) + x3)"},
                     {"15", "x0*(x1 + log(x2 + x3 + exp(x1*x1) - 0.28/x0)) - x2 - x3/(2*x0*x2)"},
                     {"16", "x2*(1.81/x2 - x3) + exp(x1) - x0*x0*sqrt(x1) - 2.34*x3/x0"},
                     {"17", "x0*x0 - x1 - x2*x2 - x3"},
                     {"18", "x0 - x3*exp(x0) + 2.96*sqrt(0.36*x1*x1 + x1*x2*x2 + 0.94) + log(x1 - x0 + 1)"
                            " + sin(2*x1 + x2)"},
                     {"19", "(x0*x0*x0*x1 - 2.86*x0 + x3)/x2"},
                     {"20", "x0 + x1 + 6.21 + 1/(x2*x3 + x2 + 2.08)"},
                     {"21", "x0*(x1 - x2 + x3) + 2*x3"},
                     {"22", "2*x0 - x1*x2 + x1*exp(x0) - x3"},
                     {"23", "x1 - x0/x1 - 2.23*x1*x2 - 2.23*x2/sqrt(x3) - 2.23*sqrt(x3) + log(x0)"},
                     {"24", "x0 - 4.81*x0*x1*log(x0) + sqrt(x3) + log(x2)"},
                     {"25", "0.38 + (cos(2*x0*x2/(x3*(x0 + x1*x2)))/x3 - x0/x3)/x1"},
                 });
}

// II.35.21 needs tanh. I.40.1, II.35.18 and III.14.14 scale an exponent by a
// physical constant near 1e23, which over (0.1,10) saturates exp to 0 or inf
// and leaves no usable signal, so they are omitted as well.
std::vector<BenchmarkSpec> feynman_n4() {
    auto out = build("feynman-", 4, kFullOps, {0.1, 10.0},
                     {
                         {"I.8.14", "sqrt((x0 - x1)*(x0 - x1) + (x2 - x3)*(x2 - x3))"},
                         {"I.13.4", "0.5*x0*(x1*x1 + x2*x2 + x3*x3)"},
                         {"I.13.12", "6.6743e-11*x0*x1*(1/x2 - 1/x3)"},
                         {"I.18.4", "(x0*x1 + x2*x3)/(x0 + x2)"},
                         {"I.18.16", "x0*x1*x2*sin(x3)"},
                         {"I.24.6", "0.25*x0*x3*x3*(x1*x1 + x2*x2)"},
                         {"I.29.16", "sqrt(x0*x0 + 2*x0*x1*cos(x2 - x3) + x1*x1)"},
                         {"I.32.17", "0.0035*3.141592653589793*x0*x0*x1*x1*x2*x2*x2*x2"
                                     "/((x2*x2 - x3*x3)*(x2*x2 - x3*x3))"},
                         {"I.43.16", "x0*x1*x2/x3"},
                         {"I.44.4", "1.38e-23*x0*x1*log(x2/x3)"},
                         {"I.50.26", "x0*(x3*cos(x1*x2)*cos(x1*x2) + cos(x1*x2))"},
                         {"II.11.20", "2.41e+22*x0*x1*x1*x2/x3"},
                         {"II.34.11", "x0*x1*x2/(2*x3)"},
                         {"II.38.3", "x0*x1*x2/x3"},
                         {"III.10.19", "x0*sqrt(x1*x1 + x2*x2 + x3*x3)"},
                         {"III.21.20", "-1*x0*x1*x2/x3"},
                         {"BONUS.1", "3.32e-57*x0*x0*x1*x1/(x2*x2*sin(x3/2)*sin(x3/2)*sin(x3/2)*sin(x3/2))"},
                         {"BONUS.3", "x0*(1 - x1*x1)/(x1*cos(x2 - x3) + 1)"},
                         {"BONUS.11", "4*x0*sin(x1/2)*sin(x1/2)*sin(x2*x3/2)*sin(x2*x3/2)"
                                      "/(x1*x1*sin(x3/2)*sin(x3/2))"},
                         {"BONUS.19", "-1872855580.36049*(8.07e+33*x0/(x1*x1) + 8.98e+16*x2*x2*(1 - 2*x3))"
                                      "/3.141592653589793"},
                     });
    // I.34.8 carries its own per-variable ranges spanning many decades.
    out.insert(out.begin() + 8, make_benchmark("feynman-I.34.8", 4, "x0*x1*x2/x3", kFullOps,
                                               {{1e-11, 1e-9}, {1e5, 1e7}, {10.0, 1e3}, {1e9, 1e11}}));
    return out;
}

} // namespace

std::vector<std::string> builtin_suite_names() { return {"trig-3-2-2", "trig-4-4-6", "livermore2-n4", "feynman-n4"}; }

std::vector<BenchmarkSpec> builtin_suite(std::string_view name) {
    if (name == "trig-3-2-2") return trig_3_2_2();
    if (name == "trig-4-4-6") return trig_4_4_6();
    if (name == "livermore2-n4") return livermore2_n4();
    if (name == "feynman-n4") return feynman_n4();
    throw std::invalid_argument("unknown suite '" + std::string(name) + "'");
}

} // namespace racing_sr
