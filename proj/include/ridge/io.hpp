#pragma once

#include <string>

#include "ridge/calculus.hpp"
#include "ridge/decompose.hpp"

namespace ridge {

/// Decomposition file format: a single JSON document with fixed key order
/// and every number printed with 17 significant digits, so write -> read ->
/// write is byte-identical and doubles round-trip exactly.
std::string encode_decomposition(const Decomposition& dec);
Decomposition decode_decomposition(const std::string& text);

void write_decomposition_file(const Decomposition& dec, const std::string& path);
Decomposition read_decomposition_file(const std::string& path);

/// Ingests a complete uniform grid from a "x,y,f" CSV (any row order) into a
/// bilinear grid-backed function. Rejects missing points, duplicates, and
/// spacing jitter beyond 1e-9 relative. Requires at least 33 nodes per axis.
BivariateFunction ingest_samples(const std::string& path, int smoothness_hint = 2);

/// Writes a "x,y,f" CSV of F sampled on an nx-by-ny grid (ingestible back).
void write_samples(const BivariateFunction& F, Rect domain, int nx, int ny,
                   const std::string& path);

/// Plot emission: per-profile "t value" tables plus a field table
/// "x y f reconstruction error" on the verification grid.
void emit_plot_data(const Decomposition& dec, const BivariateFunction& F,
                    const std::string& directory);

/// 17-significant-digit decimal, the serialization used everywhere.
std::string format_double(double v);

} // namespace ridge
