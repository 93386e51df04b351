public Object multi(String a,
                    String b) throws IOException {
    String xml = combine(a, b);
    Object o = xstream.fromXML(xml);
    return o;
}
