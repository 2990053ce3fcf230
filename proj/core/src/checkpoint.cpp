#include "duel/checkpoint.hpp"

#include "duel/error.hpp"
#include "duel/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace duel {

namespace {

constexpr int kFormatVersion = 1;

void put_number(std::string& out, double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    out.append(buf, res.ptr);
}

void put_stream(std::string& out, std::string_view name, const std::vector<Layer>& layers) {
    out += "stream ";
    out += name;
    out += ' ' + std::to_string(layers.size()) + '\n';
    for (const Layer& layer : layers) {
        out += "layer " + std::to_string(layer.out_dim()) + ' ' + std::to_string(layer.in_dim()) +
               ' ' + std::string(to_string(layer.activation)) + '\n';
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
                if (c) out += ' ';
                put_number(out, layer.weight(r, c));
            }
            out += '\n';
        }
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
            if (r) out += ' ';
            put_number(out, layer.bias(r));
        }
        out += '\n';
    }
}

class Reader {
public:
    explicit Reader(const std::string& text) : in_(text) {}

    std::string word() {
        std::string w;
        if (!(in_ >> w)) fail("unexpected end of checkpoint");
        return w;
    }

    void expect(std::string_view w) {
        const std::string got = word();
        if (got != w) fail("expected '" + std::string(w) + "', found '" + got + "'");
    }

    std::size_t count() {
        const std::string w = word();
        std::size_t value = 0;
        const auto res = std::from_chars(w.data(), w.data() + w.size(), value);
        if (res.ec != std::errc() || res.ptr != w.data() + w.size()) fail("bad integer '" + w + "'");
        return value;
    }

    double number() {
        const std::string w = word();
        double value = 0.0;
        const auto res = std::from_chars(w.data(), w.data() + w.size(), value);
        if (res.ec != std::errc() || res.ptr != w.data() + w.size()) fail("bad number '" + w + "'");
        return value;
    }

    [[noreturn]] static void fail(const std::string& msg) { throw IoError("checkpoint: " + msg); }

private:
    std::istringstream in_;
};

std::vector<Layer> read_stream(Reader& rd, std::string_view name) {
    rd.expect("stream");
    rd.expect(name);
    const std::size_t n = rd.count();
    std::vector<Layer> layers(n);
    for (Layer& layer : layers) {
        rd.expect("layer");
        const auto out = static_cast<Eigen::Index>(rd.count());
        const auto in = static_cast<Eigen::Index>(rd.count());
        const std::string act = rd.word();
        if (act == "rectifier") layer.activation = Activation::Rectifier;
        else if (act == "identity") layer.activation = Activation::Identity;
        else Reader::fail("unknown activation '" + act + "'");
        layer.weight.resize(out, in);
        for (Eigen::Index r = 0; r < out; ++r)
            for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = rd.number();
        layer.bias.resize(out);
        for (Eigen::Index r = 0; r < out; ++r) layer.bias(r) = rd.number();
    }
    return layers;
}

}  // namespace

std::string serialize_net(const DenseNet& net) {
    net.validate();
    std::string out = "duelnet " + std::to_string(kFormatVersion) + '\n';
    out += "topology " + std::string(to_string(net.topology)) + '\n';
    out += "aggregator " + std::string(to_string(net.aggregator)) + '\n';
    put_stream(out, "shared", net.shared);
    if (net.topology == Topology::Dueling) {
        put_stream(out, "value", net.value);
        put_stream(out, "advantage", net.advantage);
    }
    out += "end\n";
    return out;
}

DenseNet deserialize_net(const std::string& text) {
    Reader rd(text);
    rd.expect("duelnet");
    if (const std::size_t version = rd.count(); version != kFormatVersion)
        Reader::fail("unsupported format version " + std::to_string(version));
    DenseNet net;
    rd.expect("topology");
    const std::string topo = rd.word();
    if (topo == "single") net.topology = Topology::SingleStream;
    else if (topo == "dueling") net.topology = Topology::Dueling;
    else Reader::fail("unknown topology '" + topo + "'");
    rd.expect("aggregator");
    net.aggregator = parse_aggregator(rd.word());
    net.shared = read_stream(rd, "shared");
    if (net.topology == Topology::Dueling) {
        net.value = read_stream(rd, "value");
        net.advantage = read_stream(rd, "advantage");
    }
    rd.expect("end");
    net.validate();
    return net;
}

void save_checkpoint(const DenseNet& net, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_net(net));
}

DenseNet load_checkpoint(const std::filesystem::path& path) {
    return deserialize_net(read_file(path));
}

}  // namespace duel
