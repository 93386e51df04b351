public Object trimmed(String raw) {
    String xml = raw;
    xml = xml.trim();
    Object v = xstream.fromXML(xml);
    return v;
}
