//! Well-known IRIs and prefixes used throughout the engine.

/// `rdf:type`
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
/// `rdfs:label`
pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
/// `owl:sameAs`
pub const OWL_SAME_AS: &str = "http://www.w3.org/2002/07/owl#sameAs";
/// GeoSPARQL `geo:hasGeometry`
pub const GEO_HAS_GEOMETRY: &str = "http://www.opengis.net/ont/geosparql#hasGeometry";
/// GeoSPARQL `geo:asWKT`
pub const GEO_AS_WKT: &str = "http://www.opengis.net/ont/geosparql#asWKT";
/// Datatype IRI for WKT literals.
pub const GEO_WKT_LITERAL: &str = "http://www.opengis.net/ont/geosparql#wktLiteral";

pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
pub const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
pub const XSD_DOUBLE: &str = "http://www.w3.org/2001/XMLSchema#double";
pub const XSD_FLOAT: &str = "http://www.w3.org/2001/XMLSchema#float";

/// Returns true when `dt` is one of the XSD numeric datatypes we coerce to
/// numeric literals at load time.
pub fn is_numeric_datatype(dt: &str) -> bool {
    matches!(dt, XSD_INTEGER | XSD_DECIMAL | XSD_DOUBLE | XSD_FLOAT)
        || dt.ends_with("XMLSchema#int")
        || dt.ends_with("XMLSchema#long")
        || dt.ends_with("XMLSchema#nonNegativeInteger")
}

/// Returns true when `dt` denotes a WKT literal. Accepts both the full
/// GeoSPARQL IRI and compact `geo:wktLiteral` spellings found in the wild.
pub fn is_wkt_datatype(dt: &str) -> bool {
    dt == GEO_WKT_LITERAL || dt.ends_with("wktLiteral")
}
