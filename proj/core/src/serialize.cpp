#include "egsage/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <utility>

#include "egsage/errors.hpp"
#include "egsage/version.hpp"

namespace egsage {

auto fnv1a64(const std::uint8_t* data, std::size_t size) -> std::uint64_t {
    std::uint64_t hash = 14695981039346656037ULL;
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= data[i];
        hash *= 1099511628211ULL;
    }
    return hash;
}

namespace {

class ByteWriter {
  public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }

    void u16(std::uint16_t v) {
        bytes_.push_back(static_cast<std::uint8_t>(v & 0xFF));
        bytes_.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    }

    void u32(std::uint32_t v) {
        for (int shift = 0; shift < 32; shift += 8) {
            bytes_.push_back(static_cast<std::uint8_t>((v >> shift) & 0xFF));
        }
    }

    void u64(std::uint64_t v) {
        for (int shift = 0; shift < 64; shift += 8) {
            bytes_.push_back(static_cast<std::uint8_t>((v >> shift) & 0xFF));
        }
    }

    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void boolean(bool v) { u8(v ? 1 : 0); }

    void str(const std::string& v) {
        u64(v.size());
        bytes_.insert(bytes_.end(), v.begin(), v.end());
    }

    void magic(const char (&tag)[5]) {
        bytes_.insert(bytes_.end(), tag, tag + 4);
    }

    auto take() -> std::vector<std::uint8_t> { return std::move(bytes_); }

  private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
  public:
    ByteReader(std::vector<std::uint8_t> bytes, std::string context)
        : bytes_(std::move(bytes)), context_(std::move(context)) {}

    auto u8() -> std::uint8_t {
        need(1);
        return bytes_[offset_++];
    }

    auto u16() -> std::uint16_t {
        need(2);
        std::uint16_t v = 0;
        for (int shift = 0; shift < 16; shift += 8) {
            v = static_cast<std::uint16_t>(v | (std::uint16_t{bytes_[offset_++]} << shift));
        }
        return v;
    }

    auto u32() -> std::uint32_t {
        need(4);
        std::uint32_t v = 0;
        for (int shift = 0; shift < 32; shift += 8) {
            v |= std::uint32_t{bytes_[offset_++]} << shift;
        }
        return v;
    }

    auto u64() -> std::uint64_t {
        need(8);
        std::uint64_t v = 0;
        for (int shift = 0; shift < 64; shift += 8) {
            v |= std::uint64_t{bytes_[offset_++]} << shift;
        }
        return v;
    }

    auto f64() -> double { return std::bit_cast<double>(u64()); }

    auto boolean() -> bool { return u8() != 0; }

    auto str() -> std::string {
        const auto size = count();
        need(size);
        std::string v(reinterpret_cast<const char*>(bytes_.data() + offset_), size);
        offset_ += size;
        return v;
    }

    // Length or element count; bounded by the remaining bytes so corrupt
    // sizes fail here instead of in an allocation.
    auto count() -> std::size_t {
        const auto v = u64();
        if (v > bytes_.size() - offset_) {
            throw ArtifactError(context_ + ": truncated (count " + std::to_string(v) +
                                " exceeds remaining bytes)");
        }
        return static_cast<std::size_t>(v);
    }

    void expect_magic(const char (&tag)[5]) {
        need(4);
        if (std::memcmp(bytes_.data() + offset_, tag, 4) != 0) {
            throw ArtifactError(context_ + ": bad magic, expected " + tag);
        }
        offset_ += 4;
    }

    void expect_end() {
        if (offset_ != bytes_.size()) {
            throw ArtifactError(context_ + ": trailing bytes after payload");
        }
    }

    auto context() const -> const std::string& { return context_; }

    auto remaining() const -> std::size_t { return bytes_.size() - offset_; }

  private:
    void need(std::size_t more) {
        if (bytes_.size() - offset_ < more) {
            throw ArtifactError(context_ + ": truncated");
        }
    }

    std::vector<std::uint8_t> bytes_;
    std::string context_;
    std::size_t offset_ = 0;
};

void write_file(const std::filesystem::path& path, std::vector<std::uint8_t> bytes) {
    const auto checksum = fnv1a64(bytes.data(), bytes.size());
    ByteWriter trailer;
    trailer.u64(checksum);
    const auto tail = trailer.take();
    bytes.insert(bytes.end(), tail.begin(), tail.end());

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FileError("cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw FileError("failed writing " + path.string());
    }
}

auto read_file(const std::filesystem::path& path, const std::string& kind) -> ByteReader {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FileError("cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw FileError("failed reading " + path.string());
    }

    const std::string context = kind + " artifact " + path.string();
    if (bytes.size() < 12) {
        throw ArtifactError(context + ": file too small");
    }
    const auto payload_size = bytes.size() - 8;
    std::uint64_t stored = 0;
    for (int shift = 0; shift < 64; shift += 8) {
        stored |= std::uint64_t{bytes[payload_size + static_cast<std::size_t>(shift / 8)]}
                  << shift;
    }
    if (fnv1a64(bytes.data(), payload_size) != stored) {
        throw ArtifactError(context + ": checksum mismatch");
    }
    bytes.resize(payload_size);
    return ByteReader(std::move(bytes), context);
}

void check_version(ByteReader& reader, std::uint16_t found, std::uint16_t supported) {
    if (found == 0 || found > supported) {
        throw ArtifactError(reader.context() + ": unsupported format version " +
                            std::to_string(found));
    }
}

void write_strings(ByteWriter& writer, const std::vector<std::string>& values) {
    writer.u64(values.size());
    for (const auto& value : values) {
        writer.str(value);
    }
}

auto read_strings(ByteReader& reader) -> std::vector<std::string> {
    std::vector<std::string> values(reader.count());
    for (auto& value : values) {
        value = reader.str();
    }
    return values;
}

void write_matrix(ByteWriter& writer, const Matrix& m) {
    writer.u64(m.rows());
    writer.u64(m.cols());
    for (double v : m.values()) {
        writer.f64(v);
    }
}

auto read_matrix(ByteReader& reader) -> Matrix {
    const auto rows = reader.u64();
    const auto cols = reader.u64();
    if (cols != 0 && rows > std::numeric_limits<std::uint64_t>::max() / cols) {
        throw ArtifactError(reader.context() + ": matrix shape overflow");
    }
    const auto total = rows * cols;
    if (total > reader.remaining() / 8) {
        throw ArtifactError(reader.context() + ": truncated matrix");
    }
    Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    for (std::uint64_t i = 0; i < total; ++i) {
        m.data()[i] = reader.f64();
    }
    return m;
}

void write_schema(ByteWriter& writer, const FeatureSchema& schema) {
    writer.u8(static_cast<std::uint8_t>(schema.categorical_mode));
    writer.u64(schema.max_categories);
    writer.u64(schema.feature_dim);
    writer.u64(schema.columns.size());
    for (const auto& column : schema.columns) {
        writer.str(column.name);
        writer.u8(static_cast<std::uint8_t>(column.encoding));
        writer.f64(column.mean);
        writer.f64(column.stddev);
        writer.f64(column.min);
        writer.f64(column.max);
        write_strings(writer, column.categories);
        writer.str(column.drop_reason);
    }
}

auto read_schema(ByteReader& reader) -> FeatureSchema {
    FeatureSchema schema;
    const auto mode = reader.u8();
    if (mode > 1) {
        throw ArtifactError(reader.context() + ": bad categorical mode");
    }
    schema.categorical_mode = static_cast<CategoricalMode>(mode);
    schema.max_categories = static_cast<std::size_t>(reader.u64());
    schema.feature_dim = static_cast<std::size_t>(reader.u64());
    schema.columns.resize(reader.count());
    for (auto& column : schema.columns) {
        column.name = reader.str();
        const auto encoding = reader.u8();
        if (encoding > 2) {
            throw ArtifactError(reader.context() + ": bad column encoding");
        }
        column.encoding = static_cast<ColumnEncoding>(encoding);
        column.mean = reader.f64();
        column.stddev = reader.f64();
        column.min = reader.f64();
        column.max = reader.f64();
        column.categories = read_strings(reader);
        column.drop_reason = reader.str();
    }
    std::size_t dim = 0;
    for (const auto& column : schema.columns) {
        dim += column.dim();
    }
    if (dim != schema.feature_dim) {
        throw ArtifactError(reader.context() + ": schema feature_dim does not match columns");
    }
    return schema;
}

} // namespace

auto EncodedDataset::indices(Assignment which) const -> std::vector<std::size_t> {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        if (assignment[i] == which) {
            out.push_back(i);
        }
    }
    return out;
}

auto EncodedDataset::flow_records(const std::vector<std::size_t>& subset) const
    -> std::vector<FlowRecord> {
    std::vector<FlowRecord> out;
    out.reserve(subset.size());
    for (const auto index : subset) {
        if (index >= records.size()) {
            throw DimensionError("record index " + std::to_string(index) +
                                 " out of range for dataset of " +
                                 std::to_string(records.size()));
        }
        const auto& r = records[index];
        FlowRecord flow;
        flow.src_ip = r.src_ip;
        flow.src_port = r.src_port;
        flow.dst_ip = r.dst_ip;
        flow.dst_port = r.dst_port;
        flow.features = r.features;
        flow.is_attack = r.is_attack;
        if (r.class_id >= class_names.size()) {
            throw ArtifactError("record class id " + std::to_string(r.class_id) +
                                " out of range for " + std::to_string(class_names.size()) +
                                " classes");
        }
        flow.attack_class = class_names[r.class_id];
        flow.flow_index = r.flow_index;
        out.push_back(std::move(flow));
    }
    return out;
}

void save_dataset(const std::filesystem::path& path, const EncodedDataset& dataset) {
    if (dataset.assignment.size() != dataset.records.size()) {
        throw DimensionError("dataset has " + std::to_string(dataset.records.size()) +
                             " records but " + std::to_string(dataset.assignment.size()) +
                             " assignments");
    }
    ByteWriter writer;
    writer.magic("EGSD");
    writer.u16(kDatasetFormatVersion);
    writer.str(dataset.tool_version.empty() ? version() : dataset.tool_version);
    writer.str(dataset.config_echo);
    write_schema(writer, dataset.schema);
    write_strings(writer, dataset.class_names);
    writer.u64(dataset.seed);
    writer.f64(dataset.train_fraction);
    writer.f64(dataset.subsample_fraction);
    writer.boolean(dataset.stratified);
    writer.u64(dataset.counters.row_errors);
    writer.u64(dataset.counters.excluded_records);
    writer.u64(dataset.counters.nan_values);
    writer.u64(dataset.counters.inf_values);
    writer.u64(dataset.counters.unknown_categories);
    writer.u64(dataset.counters.comment_lines);
    writer.u64(dataset.records.size());
    for (const auto& record : dataset.records) {
        if (record.features.size() != dataset.schema.feature_dim) {
            throw DimensionError("record feature width " +
                                 std::to_string(record.features.size()) +
                                 " does not match schema width " +
                                 std::to_string(dataset.schema.feature_dim));
        }
        writer.u32(record.src_ip);
        writer.u16(record.src_port);
        writer.u32(record.dst_ip);
        writer.u16(record.dst_port);
        for (double f : record.features) {
            writer.f64(f);
        }
        writer.boolean(record.is_attack);
        writer.u16(record.class_id);
        writer.u64(record.flow_index);
    }
    for (const auto a : dataset.assignment) {
        writer.u8(static_cast<std::uint8_t>(a));
    }
    write_file(path, writer.take());
}

auto load_dataset(const std::filesystem::path& path) -> EncodedDataset {
    auto reader = read_file(path, "dataset");
    reader.expect_magic("EGSD");
    check_version(reader, reader.u16(), kDatasetFormatVersion);

    EncodedDataset dataset;
    dataset.tool_version = reader.str();
    dataset.config_echo = reader.str();
    dataset.schema = read_schema(reader);
    dataset.class_names = read_strings(reader);
    dataset.seed = reader.u64();
    dataset.train_fraction = reader.f64();
    dataset.subsample_fraction = reader.f64();
    dataset.stratified = reader.boolean();
    dataset.counters.row_errors = reader.u64();
    dataset.counters.excluded_records = reader.u64();
    dataset.counters.nan_values = reader.u64();
    dataset.counters.inf_values = reader.u64();
    dataset.counters.unknown_categories = reader.u64();
    dataset.counters.comment_lines = reader.u64();
    dataset.records.resize(reader.count());
    for (auto& record : dataset.records) {
        record.src_ip = reader.u32();
        record.src_port = reader.u16();
        record.dst_ip = reader.u32();
        record.dst_port = reader.u16();
        record.features.resize(dataset.schema.feature_dim);
        for (auto& f : record.features) {
            f = reader.f64();
        }
        record.is_attack = reader.boolean();
        record.class_id = reader.u16();
        if (record.class_id >= dataset.class_names.size()) {
            throw ArtifactError(reader.context() + ": record class id out of range");
        }
        record.flow_index = reader.u64();
    }
    dataset.assignment.resize(dataset.records.size());
    for (auto& a : dataset.assignment) {
        const auto value = reader.u8();
        if (value > 2) {
            throw ArtifactError(reader.context() + ": bad split assignment");
        }
        a = static_cast<Assignment>(value);
    }
    reader.expect_end();
    return dataset;
}

void save_model(const std::filesystem::path& path, const ModelArtifact& model) {
    validate_params(model.config, model.feature_dim, model.params);
    ByteWriter writer;
    writer.magic("EGSM");
    writer.u16(kModelFormatVersion);
    writer.str(model.tool_version.empty() ? version() : model.tool_version);
    writer.str(model.config_echo);
    writer.u64(model.config.layers);
    writer.u64(model.config.hidden);
    writer.f64(model.config.dropout_rate);
    writer.u64(model.config.num_classes);
    writer.u64(model.config.neighbor_sample_size);
    writer.u8(static_cast<std::uint8_t>(model.config.neighbor_source));
    writer.u8(static_cast<std::uint8_t>(model.targets));
    writer.u64(model.feature_dim);
    write_schema(writer, model.schema);
    write_strings(writer, model.class_names);
    writer.u64(model.params.layer_weights.size());
    for (const auto& w : model.params.layer_weights) {
        write_matrix(writer, w);
    }
    write_matrix(writer, model.params.head);
    write_file(path, writer.take());
}

auto load_model(const std::filesystem::path& path) -> ModelArtifact {
    auto reader = read_file(path, "model");
    reader.expect_magic("EGSM");
    check_version(reader, reader.u16(), kModelFormatVersion);

    ModelArtifact model;
    model.tool_version = reader.str();
    model.config_echo = reader.str();
    model.config.layers = static_cast<std::size_t>(reader.u64());
    model.config.hidden = static_cast<std::size_t>(reader.u64());
    model.config.dropout_rate = reader.f64();
    model.config.num_classes = static_cast<std::size_t>(reader.u64());
    model.config.neighbor_sample_size = static_cast<std::size_t>(reader.u64());
    const auto source = reader.u8();
    if (source > 1) {
        throw ArtifactError(reader.context() + ": bad neighbor source");
    }
    model.config.neighbor_source = static_cast<NeighborSource>(source);
    const auto targets = reader.u8();
    if (targets > 1) {
        throw ArtifactError(reader.context() + ": bad target mode");
    }
    model.targets = static_cast<TargetMode>(targets);
    model.feature_dim = static_cast<std::size_t>(reader.u64());
    model.schema = read_schema(reader);
    model.class_names = read_strings(reader);
    model.params.layer_weights.resize(reader.count());
    for (auto& w : model.params.layer_weights) {
        w = read_matrix(reader);
    }
    model.params.head = read_matrix(reader);
    reader.expect_end();

    if (model.class_names.size() != model.config.num_classes) {
        throw ArtifactError(reader.context() + ": class table does not match num_classes");
    }
    try {
        validate_params(model.config, model.feature_dim, model.params);
    } catch (const DimensionError& e) {
        throw ArtifactError(reader.context() + ": " + e.what());
    }
    return model;
}

void save_graph(const std::filesystem::path& path,
                const FlowGraph& graph,
                const std::string& config_echo) {
    validate_graph(graph);
    ByteWriter writer;
    writer.magic("EGSG");
    writer.u16(kGraphFormatVersion);
    writer.str(version());
    writer.str(config_echo);
    writer.u64(graph.feature_dim);
    write_strings(writer, graph.class_names);
    writer.u64(graph.nodes.size());
    for (const auto& node : graph.nodes) {
        writer.u32(node.ip);
        writer.u16(node.port);
    }
    writer.u64(graph.num_edges());
    for (std::size_t e = 0; e < graph.num_edges(); ++e) {
        writer.u32(graph.edge_src[e]);
        writer.u32(graph.edge_dst[e]);
        for (std::size_t j = 0; j < graph.feature_dim; ++j) {
            writer.f64(graph.edge_features(e, j));
        }
        writer.u8(graph.edge_is_attack[e]);
        writer.u16(graph.edge_class[e]);
        writer.u64(graph.edge_flow_index[e]);
    }
    write_file(path, writer.take());
}

auto load_graph(const std::filesystem::path& path) -> FlowGraph {
    auto reader = read_file(path, "graph");
    reader.expect_magic("EGSG");
    check_version(reader, reader.u16(), kGraphFormatVersion);
    reader.str();
    reader.str();

    FlowGraph graph;
    graph.feature_dim = static_cast<std::size_t>(reader.u64());
    graph.class_names = read_strings(reader);
    graph.nodes.resize(reader.count());
    for (auto& node : graph.nodes) {
        node.ip = reader.u32();
        node.port = reader.u16();
    }
    const auto num_edges = reader.count();
    graph.edge_features = Matrix(num_edges, graph.feature_dim);
    graph.edge_src.resize(num_edges);
    graph.edge_dst.resize(num_edges);
    graph.edge_is_attack.resize(num_edges);
    graph.edge_class.resize(num_edges);
    graph.edge_flow_index.resize(num_edges);
    for (std::size_t e = 0; e < num_edges; ++e) {
        graph.edge_src[e] = reader.u32();
        graph.edge_dst[e] = reader.u32();
        if (graph.edge_src[e] >= graph.nodes.size() || graph.edge_dst[e] >= graph.nodes.size()) {
            throw ArtifactError(reader.context() + ": edge endpoint out of range");
        }
        for (std::size_t j = 0; j < graph.feature_dim; ++j) {
            graph.edge_features(e, j) = reader.f64();
        }
        graph.edge_is_attack[e] = reader.u8();
        graph.edge_class[e] = reader.u16();
        if (graph.edge_class[e] >= graph.class_names.size()) {
            throw ArtifactError(reader.context() + ": edge class out of range");
        }
        graph.edge_flow_index[e] = reader.u64();
    }
    reader.expect_end();

    rebuild_incidence(graph);
    try {
        validate_graph(graph);
    } catch (const Error& e) {
        throw ArtifactError(reader.context() + ": " + e.what());
    }
    return graph;
}

} // namespace egsage
