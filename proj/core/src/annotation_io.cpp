#include "tsr/annotation_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tsr/error.hpp"

namespace tsr {

using nlohmann::json;

namespace {

json points_json(const Polyline& p) {
  json arr = json::array();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Point q = p.point(i);
    arr.push_back({q.x, q.y});
  }
  return arr;
}

json polygon_json(const std::vector<Point>& poly) {
  json arr = json::array();
  for (const Point& p : poly) arr.push_back({p.x, p.y});
  return arr;
}

Polyline polyline_from(const json& arr, Axis axis) {
  Polyline p;
  p.axis = axis;
  for (const auto& pt : arr) {
    const double x = pt.at(0).get<double>();
    const double y = pt.at(1).get<double>();
    p.positions.push_back(axis == Axis::Row ? x : y);
    p.values.push_back(axis == Axis::Row ? y : x);
  }
  p.validate();
  return p;
}

json separators_json(const std::vector<Separator>& seps) {
  json arr = json::array();
  for (const auto& s : seps)
    arr.push_back({{"top", points_json(s.top)}, {"center", points_json(s.center)}, {"bottom", points_json(s.bottom)}});
  return arr;
}

std::vector<Separator> separators_from(const json& arr, Axis axis) {
  std::vector<Separator> out;
  for (const auto& s : arr) {
    Separator sep{axis, polyline_from(s.at("top"), axis), polyline_from(s.at("center"), axis),
                  polyline_from(s.at("bottom"), axis)};
    sep.validate();
    out.push_back(std::move(sep));
  }
  return out;
}

json cell_json(const CellBox& c, bool with_spans) {
  json j{{"row_start", c.row_start},
         {"col_start", c.col_start},
         {"row_end", c.row_end},
         {"col_end", c.col_end},
         {"polygon", polygon_json(c.polygon)}};
  if (with_spans) {
    j["row_span"] = c.row_span();
    j["col_span"] = c.col_span();
  }
  return j;
}

CellBox cell_from(const json& j) {
  CellBox c;
  c.row_start = j.at("row_start").get<int>();
  c.col_start = j.at("col_start").get<int>();
  c.row_end = j.at("row_end").get<int>();
  c.col_end = j.at("col_end").get<int>();
  for (const auto& pt : j.at("polygon")) c.polygon.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
  if (c.row_start > c.row_end || c.col_start > c.col_end || c.row_start < 0 || c.col_start < 0)
    throw InvalidInput("cell has an inverted or negative grid extent");
  if (j.contains("row_span") && j["row_span"].get<int>() != c.row_span())
    throw InvalidInput("cell row_span disagrees with row_start/row_end");
  if (j.contains("col_span") && j["col_span"].get<int>() != c.col_span())
    throw InvalidInput("cell col_span disagrees with col_start/col_end");
  update_bbox(c);
  return c;
}

ImageSize size_from(const json& j) {
  const auto& s = j.at("image_size");
  ImageSize size{s.at(0).get<int>(), s.at(1).get<int>()};
  if (size.height <= 0 || size.width <= 0) throw InvalidInput("image_size must be positive");
  return size;
}

template <class F>
auto parse_guarded(std::string_view text, F&& f) {
  try {
    return f(json::parse(text));
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed table JSON: ") + e.what());
  }
}

}  // namespace

std::string annotation_to_json(const TableAnnotation& a) {
  json j;
  j["image_size"] = {a.image_size.height, a.image_size.width};
  j["cells"] = json::array();
  for (const auto& c : a.cells) j["cells"].push_back(cell_json(c, false));
  j["row_separators"] = separators_json(a.row_separators);
  j["col_separators"] = separators_json(a.col_separators);
  if (!a.content_boxes.empty()) {
    j["content_boxes"] = json::array();
    for (const auto& r : a.content_boxes) j["content_boxes"].push_back({r.x0, r.y0, r.x1, r.y1});
  }
  return j.dump(1);
}

TableAnnotation annotation_from_json(std::string_view text) {
  return parse_guarded(text, [](const json& j) {
    TableAnnotation a;
    a.image_size = size_from(j);
    for (const auto& c : j.at("cells")) a.cells.push_back(cell_from(c));
    a.row_separators = separators_from(j.value("row_separators", json::array()), Axis::Row);
    a.col_separators = separators_from(j.value("col_separators", json::array()), Axis::Column);
    if (j.contains("content_boxes"))
      for (const auto& r : j["content_boxes"])
        a.content_boxes.push_back({r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(),
                                   r.at(3).get<double>()});
    return a;
  });
}

std::string result_to_json(const TableResult& r) {
  json j;
  j["image_size"] = {r.image_size.height, r.image_size.width};
  j["status"] = r.status;
  if (!r.message.empty()) j["message"] = r.message;
  j["cells"] = json::array();
  for (const auto& c : r.cells) j["cells"].push_back(cell_json(c, true));
  j["row_separators"] = separators_json(r.row_separators);
  j["col_separators"] = separators_json(r.col_separators);
  return j.dump(1);
}

CellFile load_cells(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  return parse_guarded(text, [](const json& j) {
    CellFile f;
    f.image_size = size_from(j);
    for (const auto& c : j.at("cells")) f.cells.push_back(cell_from(c));
    if (j.contains("content_boxes"))
      for (const auto& r : j["content_boxes"])
        f.content_boxes.push_back({r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(),
                                   r.at(3).get<double>()});
    return f;
  });
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
  out << text;
}

void save_annotation(const TableAnnotation& a, const std::filesystem::path& path) {
  write_text(path, annotation_to_json(a));
}

TableAnnotation load_annotation(const std::filesystem::path& path) { return annotation_from_json(read_text(path)); }

void save_result(const TableResult& r, const std::filesystem::path& path) { write_text(path, result_to_json(r)); }

}  // namespace tsr
