#include "impulse/lsmc.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace impulse::lsmc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// per-path generator so the ensemble is bit-identical regardless of batching
std::mt19937_64 path_rng(std::uint64_t seed, int path) {
    return std::mt19937_64(splitmix64(seed ^ (0x51ed2701ULL + static_cast<std::uint64_t>(path))));
}

}  // namespace

PathEnsemble simulate_paths(const PathSpec& spec, const TimeGrid& grid, int n_paths,
                            std::uint64_t seed) {
    require(n_paths >= 1, Errc::BadSpec, "need at least one path");
    PathEnsemble ens;
    ens.n_paths = n_paths;
    ens.n_times = grid.steps + 1;
    ens.seed = seed;

    switch (spec.kind) {
        case PathSpec::Kind::Constant: {
            require(!spec.x0.empty(), Errc::BadSpec, "constant paths need an initial state");
            ens.dim = static_cast<int>(spec.x0.size());
            ens.data.resize(static_cast<std::size_t>(n_paths) * ens.n_times * ens.dim);
            for (int m = 0; m < n_paths; ++m)
                for (int i = 0; i < ens.n_times; ++i)
                    for (int c = 0; c < ens.dim; ++c) ens.x(m, i, c) = spec.x0[c];
            break;
        }
        case PathSpec::Kind::Euler: {
            require(!spec.x0.empty() && spec.drift && spec.vol, Errc::BadSpec,
                    "Euler paths need x0, drift and vol");
            ens.dim = static_cast<int>(spec.x0.size());
            ens.data.resize(static_cast<std::size_t>(n_paths) * ens.n_times * ens.dim);
            const double sq = std::sqrt(grid.dt);
            const int stride = spec.antithetic ? 2 : 1;
            for (int m = 0; m < n_paths; m += stride) {
                auto rng = path_rng(seed, m / stride);
                std::normal_distribution<double> normal(0.0, 1.0);
                Vec x = spec.x0, xa = spec.x0;
                for (int c = 0; c < ens.dim; ++c) ens.x(m, 0, c) = x[c];
                if (spec.antithetic && m + 1 < n_paths)
                    for (int c = 0; c < ens.dim; ++c) ens.x(m + 1, 0, c) = x[c];
                for (int i = 0; i < grid.steps; ++i) {
                    const Vec b = spec.drift(grid.time(i), x);
                    const Vec s = spec.vol(grid.time(i), x);
                    const Vec ba = spec.antithetic ? spec.drift(grid.time(i), xa) : Vec{};
                    const Vec sa = spec.antithetic ? spec.vol(grid.time(i), xa) : Vec{};
                    for (int c = 0; c < ens.dim; ++c) {
                        const double z = normal(rng);
                        x[c] += b[c] * grid.dt + s[c] * sq * z;
                        ens.x(m, i + 1, c) = x[c];
                        if (spec.antithetic && m + 1 < n_paths) {
                            xa[c] += ba[c] * grid.dt - sa[c] * sq * z;
                            ens.x(m + 1, i + 1, c) = xa[c];
                        }
                    }
                }
            }
            break;
        }
        case PathSpec::Kind::Gbm: {
            require(!spec.x0.empty() && spec.gbm_mu.size() == spec.x0.size() &&
                        spec.gbm_sigma.size() == spec.x0.size(),
                    Errc::BadSpec, "GBM paths need matching x0, mu, sigma");
            ens.dim = static_cast<int>(spec.x0.size());
            ens.data.resize(static_cast<std::size_t>(n_paths) * ens.n_times * ens.dim);
            const double sq = std::sqrt(grid.dt);
            const int stride = spec.antithetic ? 2 : 1;
            for (int m = 0; m < n_paths; m += stride) {
                auto rng = path_rng(seed, m / stride);
                std::normal_distribution<double> normal(0.0, 1.0);
                for (int c = 0; c < ens.dim; ++c) {
                    ens.x(m, 0, c) = spec.x0[c];
                    if (spec.antithetic && m + 1 < n_paths) ens.x(m + 1, 0, c) = spec.x0[c];
                }
                for (int i = 0; i < grid.steps; ++i)
                    for (int c = 0; c < ens.dim; ++c) {
                        const double det =
                            (spec.gbm_mu[c] - 0.5 * spec.gbm_sigma[c] * spec.gbm_sigma[c]) *
                            grid.dt;
                        const double z = normal(rng);
                        ens.x(m, i + 1, c) =
                            ens.x(m, i, c) * std::exp(det + spec.gbm_sigma[c] * sq * z);
                        if (spec.antithetic && m + 1 < n_paths)
                            ens.x(m + 1, i + 1, c) =
                                ens.x(m + 1, i, c) * std::exp(det - spec.gbm_sigma[c] * sq * z);
                    }
            }
            break;
        }
        case PathSpec::Kind::MarkovChain: {
            require(spec.chain != nullptr, Errc::BadSpec, "chain paths need a lattice model");
            const MarkovLattice& chain = *spec.chain;
            require(chain.grid.steps == grid.steps, Errc::BadSpec,
                    "chain grid does not match the requested grid");
            ens.dim = chain.dim();
            ens.data.resize(static_cast<std::size_t>(n_paths) * ens.n_times * ens.dim);
            ens.state_ids.resize(static_cast<std::size_t>(n_paths) * ens.n_times);
            const auto init = chain.initial_weights();
            for (int m = 0; m < n_paths; ++m) {
                auto rng = path_rng(seed, m);
                std::uniform_real_distribution<double> unif(0.0, 1.0);
                auto draw = [&](const double* w, int n) {
                    double u = unif(rng), acc = 0.0;
                    for (int t = 0; t < n; ++t) {
                        acc += w[t];
                        if (u <= acc) return t;
                    }
                    return n - 1;
                };
                int s = draw(init.data(), chain.n_states());
                for (int i = 0; i <= grid.steps; ++i) {
                    ens.state_ids[static_cast<std::size_t>(m) * ens.n_times + i] = s;
                    for (int c = 0; c < ens.dim; ++c) ens.x(m, i, c) = chain.states[s][c];
                    if (i < grid.steps) s = draw(chain.kernel(i).row(s), chain.n_states());
                }
            }
            break;
        }
    }
    return ens;
}

void write_path_file(const std::string& path, const PathEnsemble& ens) {
    std::ofstream out(path);
    require(out.good(), Errc::BadConfig, "cannot write " + path);
    out << "path_id,i";
    for (int c = 0; c < ens.dim; ++c) out << ",x_" << (c + 1);
    out << '\n';
    char buf[40];
    for (int m = 0; m < ens.n_paths; ++m)
        for (int i = 0; i < ens.n_times; ++i) {
            out << m << ',' << i;
            for (int c = 0; c < ens.dim; ++c) {
                auto res = std::to_chars(buf, buf + sizeof(buf), ens.x(m, i, c));
                out << ',';
                out.write(buf, res.ptr - buf);
            }
            out << '\n';
        }
}

PathEnsemble load_path_file(const std::string& path, const TimeGrid& grid) {
    std::ifstream in(path);
    require(in.good(), Errc::BadSpec, "cannot read path file " + path);
    std::string header;
    std::getline(in, header);
    int dim = -1;  // from the header column count
    {
        int commas = 0;
        for (char ch : header)
            if (ch == ',') ++commas;
        dim = commas - 1;
    }
    require(dim >= 1, Errc::BadSpec, "path file header needs path_id,i,x_1..");

    std::vector<double> flat;
    std::string line;
    int max_path = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');
        const int m = std::stoi(field);
        std::getline(ss, field, ',');
        const int i = std::stoi(field);
        require(i >= 0 && i <= grid.steps, Errc::BadSpec, "path file time index off the grid");
        max_path = std::max(max_path, m);
        const std::size_t need =
            (static_cast<std::size_t>(max_path) + 1) * (grid.steps + 1) * dim;
        if (flat.size() < need) flat.resize(need, std::numeric_limits<double>::quiet_NaN());
        for (int c = 0; c < dim; ++c) {
            require(static_cast<bool>(std::getline(ss, field, ',')), Errc::BadSpec,
                    "path file row too short");
            flat[(static_cast<std::size_t>(m) * (grid.steps + 1) + i) * dim + c] =
                std::stod(field);
        }
    }
    require(max_path >= 0, Errc::BadSpec, "path file holds no rows");
    for (double v : flat)
        require(std::isfinite(v), Errc::BadSpec, "path file leaves grid nodes unfilled");

    PathEnsemble ens;
    ens.n_paths = max_path + 1;
    ens.n_times = grid.steps + 1;
    ens.dim = dim;
    ens.seed = 0;
    ens.data = std::move(flat);
    return ens;
}

Matrix feature_matrix(const PathEnsemble& ens, const RegressionBasis& basis, int i,
                      const RewardFn& reward, const TimeGrid& grid) {
    const int B = basis.n_features(ens.dim);
    Matrix phi(ens.n_paths, B);
    for (int m = 0; m < ens.n_paths; ++m) {
        int b = 0;
        if (basis.kind == RegressionBasis::Kind::Polynomial) {
            phi(m, b++) = 1.0;
            for (int c = 0; c < ens.dim; ++c) {
                double p = 1.0;
                for (int q = 1; q <= basis.degree; ++q) {
                    p *= ens.x(m, i, c);
                    phi(m, b++) = p;
                }
            }
        } else {
            // one-hot on the nearest anchor state
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < basis.lattice_states.size(); ++a) {
                double dsq = 0.0;
                for (int c = 0; c < ens.dim; ++c) {
                    const double diff = ens.x(m, i, c) - basis.lattice_states[a][c];
                    dsq += diff * diff;
                }
                if (dsq < best_d) {
                    best_d = dsq;
                    best = static_cast<int>(a);
                }
            }
            for (std::size_t a = 0; a < basis.lattice_states.size(); ++a)
                phi(m, b++) = a == static_cast<std::size_t>(best) ? 1.0 : 0.0;
        }
        if (basis.include_running_reward) {
            double acc = 0.0;
            Vec x(ens.dim);
            for (int j = 0; j < i; ++j) {
                for (int c = 0; c < ens.dim; ++c) x[c] = ens.x(m, j, c);
                acc += reward(grid.time(j), x) * grid.dt;
            }
            phi(m, b++) = acc;
        }
    }
    return phi;
}

Predictor fit_least_squares(const Matrix& design, const std::vector<double>& targets,
                            double ridge_lambda) {
    const int M = static_cast<int>(design.rows());
    const int B = static_cast<int>(design.cols());
    require(static_cast<int>(targets.size()) == M, Errc::BadSpec,
            "one target per design row");
    for (double t : targets)
        require(std::isfinite(t), Errc::BadSpec, "regression targets must be finite");

    // normal equations
    std::vector<double> xtx(static_cast<std::size_t>(B) * B, 0.0);
    std::vector<double> xty(B, 0.0);
    for (int m = 0; m < M; ++m) {
        const double* row = design.row(m);
        for (int a = 0; a < B; ++a) {
            xty[a] += row[a] * targets[m];
            for (int b = a; b < B; ++b) xtx[a * B + b] += row[a] * row[b];
        }
    }
    for (int a = 0; a < B; ++a)
        for (int b = 0; b < a; ++b) xtx[a * B + b] = xtx[b * B + a];

    // LDL^T with singularity detection; ridge retry on failure. The plain
    // pass rejects pivots below a rank threshold, the ridge pass accepts any
    // positive pivot (the shift itself guarantees definiteness).
    auto factor_solve = [&](double lambda, bool ranked, Predictor& out) {
        std::vector<double> A = xtx;
        for (int a = 0; a < B; ++a) A[a * B + a] += lambda;
        std::vector<double> L(static_cast<std::size_t>(B) * B, 0.0);
        std::vector<double> D(B, 0.0);
        double dmax = 0.0;
        for (int j = 0; j < B; ++j) {
            double dj = A[j * B + j];
            for (int k = 0; k < j; ++k) dj -= L[j * B + k] * L[j * B + k] * D[k];
            D[j] = dj;
            dmax = std::max(dmax, std::abs(dj));
            if (dj <= 0.0 || (ranked && dj <= dmax * 1e-13)) return false;
            L[j * B + j] = 1.0;
            for (int r = j + 1; r < B; ++r) {
                double v = A[r * B + j];
                for (int k = 0; k < j; ++k) v -= L[r * B + k] * L[j * B + k] * D[k];
                L[r * B + j] = v / dj;
            }
        }
        std::vector<double> z = xty;
        for (int r = 0; r < B; ++r)
            for (int k = 0; k < r; ++k) z[r] -= L[r * B + k] * z[k];
        for (int r = 0; r < B; ++r) z[r] /= D[r];
        for (int r = B - 1; r >= 0; --r)
            for (int k = r + 1; k < B; ++k) z[r] -= L[k * B + r] * z[k];
        out.coef = std::move(z);
        double dmin = std::numeric_limits<double>::infinity();
        for (int j = 0; j < B; ++j) dmin = std::min(dmin, std::abs(D[j]));
        out.condition = dmin > 0.0 ? dmax / dmin : std::numeric_limits<double>::infinity();
        return true;
    };

    double scale = 0.0;
    for (int a = 0; a < B; ++a) scale = std::max(scale, xtx[a * B + a]);
    Predictor p;
    if (!factor_solve(0.0, true, p)) {
        p.ridge_fallback = true;
        const double lambda = (ridge_lambda > 0.0 ? ridge_lambda : 1e-10) * std::max(1.0, scale);
        require(factor_solve(lambda, false, p), Errc::BadSpec,
                "ridge fallback failed on a singular design");
    }
    return p;
}

Predictor fit_conditional_expectation(const PathEnsemble& ens, const std::vector<double>& targets,
                                      const RegressionBasis& basis, int i, int i_known,
                                      const RewardFn& reward, const TimeGrid& grid,
                                      double ridge_lambda) {
    require(i <= i_known, Errc::BadSpec, "conditioning index must not exceed the target index");
    require(ens.n_paths >= 10 * basis.n_features(ens.dim), Errc::BadSpec,
            "need at least 10 paths per feature");
    return fit_least_squares(feature_matrix(ens, basis, i, reward, grid), targets, ridge_lambda);
}

namespace {

// realised remaining reward sums per path for one cumulative impulse
void realised_tail(const PathEnsemble& ens, const TimeGrid& grid, const RewardFn& reward,
                   const Vec& shift, Matrix& out) {
    out = Matrix(ens.n_paths, grid.steps + 1, 0.0);
    Vec x(ens.dim);
    for (int m = 0; m < ens.n_paths; ++m) {
        double acc = 0.0;
        for (int i = grid.steps - 1; i >= 0; --i) {
            for (int c = 0; c < ens.dim; ++c) x[c] = ens.x(m, i, c) + shift[c];
            acc += reward(grid.time(i), x) * grid.dt;
            out(m, i) = acc;
        }
    }
}

}  // namespace

SolveResult lsmc_solve(const PathEnsemble& ens, const ImpulseMenu& menu, const TimeGrid& grid,
                       const CumulativeLattice& lat, const RewardFn& reward, const Config& cfg) {
    require(ens.n_times == grid.steps + 1, Errc::BadSpec, "ensemble grid mismatch");
    const int M = ens.n_paths;
    const int N = grid.steps;
    const int d = grid.delay_steps;
    const int X =
        cfg.max_impulses >= 0 ? std::min(cfg.max_impulses, lat.max_depth()) : lat.max_depth();
    const int B = cfg.basis.n_features(ens.dim);
    require(M >= 10 * B, Errc::BadSpec, "need at least 10 paths per feature");

    SolveResult result;
    result.rule.levels = X;
    result.rule.steps = N;
    result.rule.delay_steps = d;
    result.rule.fit_seed = ens.seed;
    result.rule.basis = cfg.basis;

    // realised level-0 sums per lattice id
    std::vector<Matrix> tail(lat.size());
    for (int a = 0; a < lat.size(); ++a) realised_tail(ens, grid, reward, lat.value(a), tail[a]);

    // level 0 value fits
    auto fit_values = [&](const std::vector<Matrix>& realised, int max_a_depth,
                          std::vector<std::vector<Predictor>>& out) {
        out.assign(lat.size(), {});
        std::vector<double> targets(M);
        for (int a = 0; a < lat.size(); ++a) {
            if (lat.depth(a) > max_a_depth) continue;
            out[a].resize(N);
            for (int i = 0; i < N; ++i) {
                const Matrix phi = feature_matrix(ens, cfg.basis, i, reward, grid);
                for (int m = 0; m < M; ++m) targets[m] = realised[a](m, i);
                out[a][i] = fit_least_squares(phi, targets, cfg.ridge_lambda);
            }
        }
    };

    result.rule.value_fit.resize(std::max(X, 1));
    result.rule.obstacle_fit.resize(X);
    result.rule.continuation_fit.resize(X);

    std::vector<Matrix> realised_prev = tail;  // level n-1 realised values
    if (X > 0) fit_values(realised_prev, X, result.rule.value_fit[0]);

    for (int n = 1; n <= X; ++n) {
        const int k = X - n + 1;  // impulse index using this level
        auto& obst_fit = result.rule.obstacle_fit[k - 1];
        auto& cont_fit = result.rule.continuation_fit[k - 1];
        obst_fit.assign(lat.size(), {});
        cont_fit.assign(lat.size(), {});

        std::vector<Matrix> realised(lat.size());
        for (int a = 0; a < lat.size(); ++a) {
            if (lat.depth(a) > X - n) continue;
            Matrix r(M, N + 1, 0.0);
            // terminal window: no effective intervention possible
            for (int i = N - d; i <= N; ++i)
                for (int m = 0; m < M; ++m) r(m, i) = tail[a](m, i);

            obst_fit[a].resize(std::max(0, N - d));
            cont_fit[a].resize(std::max(0, N - d));
            std::vector<double> stop_target(M), cont_target(M);
            std::vector<int> picked(M);
            std::vector<double> phi_row;

            for (int i = N - d - 1; i >= 0; --i) {
                const Matrix phi_exec = feature_matrix(ens, cfg.basis, i + d, reward, grid);
                const Matrix phi_now = feature_matrix(ens, cfg.basis, i, reward, grid);
                const auto& child_fit = result.rule.value_fit[n - 1];
                for (int m = 0; m < M; ++m) {
                    // size decided at the execution node from fitted child values
                    double best = -std::numeric_limits<double>::infinity();
                    int arg = 0;
                    phi_row.assign(phi_exec.row(m), phi_exec.row(m) + B);
                    for (int j = 0; j < menu.size(); ++j) {
                        const int child = lat.child_of(a, j);
                        require(child != CumulativeLattice::kNoChild, Errc::MissingChild,
                                "lattice too shallow for the impulse budget");
                        const double cand =
                            -menu.costs[j] + child_fit[child][i + d].value(phi_row);
                        if (cand > best) {
                            best = cand;
                            arg = j;
                        }
                    }
                    picked[m] = arg;
                    const int child = lat.child_of(a, picked[m]);
                    const double window = tail[a](m, i) - tail[a](m, i + d);
                    stop_target[m] =
                        window - menu.costs[picked[m]] + realised_prev[child](m, i + d);
                    cont_target[m] = tail[a](m, i) - tail[a](m, i + 1) + r(m, i + 1);
                }
                Predictor obst = fit_least_squares(phi_now, stop_target, cfg.ridge_lambda);
                Predictor cont = fit_least_squares(phi_now, cont_target, cfg.ridge_lambda);
                for (int m = 0; m < M; ++m) {
                    phi_row.assign(phi_now.row(m), phi_now.row(m) + B);
                    const bool stop = obst.value(phi_row) >= cont.value(phi_row);
                    r(m, i) = stop ? stop_target[m] : cont_target[m];
                }
                obst_fit[a][i] = std::move(obst);
                cont_fit[a][i] = std::move(cont);
            }
            realised[a] = std::move(r);
        }
        realised_prev = std::move(realised);
        if (n < X) fit_values(realised_prev, X - n, result.rule.value_fit[n]);
    }

    // in-sample estimate from the realised top-level values at the root
    const Matrix& top = X > 0 ? realised_prev[0] : tail[0];
    double mean = 0.0;
    for (int m = 0; m < M; ++m) mean += top(m, 0);
    mean /= M;
    double var = 0.0;
    for (int m = 0; m < M; ++m) var += (top(m, 0) - mean) * (top(m, 0) - mean);
    var = M > 1 ? var / (M - 1) : 0.0;
    result.value_insample = mean;
    result.stderr_insample = std::sqrt(var / M);
    return result;
}

Evaluation simulate_strategy_payoff(const FittedRule& rule, const PathEnsemble& fresh,
                                    const ImpulseMenu& menu, const TimeGrid& grid,
                                    const CumulativeLattice& lat, const RewardFn& reward) {
    require(fresh.n_times == grid.steps + 1, Errc::BadSpec, "ensemble grid mismatch");
    require(rule.steps == grid.steps && rule.delay_steps == grid.delay_steps,
            Errc::InadmissibleRule, "rule was built for a different grid");
    const int M = fresh.n_paths;
    const int N = grid.steps;
    const int d = grid.delay_steps;
    const int B = rule.basis.n_features(fresh.dim);

    Evaluation ev;
    ev.n_paths = M;
    ev.seed_collision = fresh.seed == rule.fit_seed;

    double sum = 0.0, sumsq = 0.0;
    std::vector<double> phi(B);
    Vec x(fresh.dim);
    auto features_at = [&](int m, int i) {
        // single-path features mirror feature_matrix
        int b = 0;
        if (rule.basis.kind == RegressionBasis::Kind::Polynomial) {
            phi[b++] = 1.0;
            for (int c = 0; c < fresh.dim; ++c) {
                double p = 1.0;
                for (int q = 1; q <= rule.basis.degree; ++q) {
                    p *= fresh.x(m, i, c);
                    phi[b++] = p;
                }
            }
        } else {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < rule.basis.lattice_states.size(); ++a) {
                double dsq = 0.0;
                for (int c = 0; c < fresh.dim; ++c) {
                    const double diff = fresh.x(m, i, c) - rule.basis.lattice_states[a][c];
                    dsq += diff * diff;
                }
                if (dsq < best_d) {
                    best_d = dsq;
                    best = static_cast<int>(a);
                }
            }
            for (std::size_t a = 0; a < rule.basis.lattice_states.size(); ++a)
                phi[b++] = a == static_cast<std::size_t>(best) ? 1.0 : 0.0;
        }
        if (rule.basis.include_running_reward) {
            double acc = 0.0;
            for (int j = 0; j < i; ++j) {
                for (int c = 0; c < fresh.dim; ++c) x[c] = fresh.x(m, j, c);
                acc += reward(grid.time(j), x) * grid.dt;
            }
            phi[b++] = acc;
        }
    };

    for (int m = 0; m < M; ++m) {
        // walk the rule along the path
        std::vector<int> a_at(N, 0);  // cumulative id in force at each reward step
        double costs = 0.0;
        int a_id = 0, k = 1, i = 0;
        bool alive = true;
        while (alive && k <= rule.levels && i < N - d) {
            const auto& ofit = rule.obstacle_fit[k - 1][a_id];
            const auto& cfit = rule.continuation_fit[k - 1][a_id];
            int stop_at = -1;
            for (; i < N - d; ++i) {
                features_at(m, i);
                if (ofit[i].value(phi) >= cfit[i].value(phi)) {
                    stop_at = i;
                    break;
                }
            }
            if (stop_at < 0) break;
            const int i_exec = stop_at + d;
            features_at(m, i_exec);
            double best = -std::numeric_limits<double>::infinity();
            int arg = 0;
            const auto& child_fit = rule.value_fit[rule.levels - k];
            for (int j = 0; j < menu.size(); ++j) {
                const int child = lat.child_of(a_id, j);
                const double cand = -menu.costs[j] + child_fit[child][i_exec].value(phi);
                if (cand > best) {
                    best = cand;
                    arg = j;
                }
            }
            costs += menu.costs[arg];
            a_id = lat.child_of(a_id, arg);
            for (int j = i_exec; j < N; ++j) a_at[j] = a_id;
            alive = stop_at <= N - 2 * d;
            k += 1;
            i = i_exec;
        }
        double payoff = -costs;
        for (int j = 0; j < N; ++j) {
            const Vec& shift = lat.value(a_at[j]);
            for (int c = 0; c < fresh.dim; ++c) x[c] = fresh.x(m, j, c) + shift[c];
            payoff += reward(grid.time(j), x) * grid.dt;
        }
        sum += payoff;
        sumsq += payoff * payoff;
    }

    ev.mean = sum / M;
    const double var = M > 1 ? (sumsq - M * ev.mean * ev.mean) / (M - 1) : 0.0;
    ev.se = std::sqrt(std::max(0.0, var) / M);
    ev.ci_low = ev.mean - 1.959963984540054 * ev.se;
    ev.ci_high = ev.mean + 1.959963984540054 * ev.se;
    return ev;
}

}  // namespace impulse::lsmc
