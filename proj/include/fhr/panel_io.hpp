#pragma once

#include "fhr/mph.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace fhr {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& msg)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// unit,y0,x1,y1,...,xT,yT[,v]
std::string panel_csv_header(int T, bool with_latent);

// Numbers use 17 significant digits, so write(read(file)) reproduces the file.
void write_panel_csv(std::ostream& os, const Panel& panel, bool with_latent);
void write_panel_csv(const std::string& path, const Panel& panel, bool with_latent);

// Reads the scalar-covariate schema above; T is taken from the header. Missing v is stored as NaN.
Panel read_panel_csv(std::istream& is, const std::string& source = "<input>");
Panel read_panel_csv(const std::string& path);

}  // namespace fhr
