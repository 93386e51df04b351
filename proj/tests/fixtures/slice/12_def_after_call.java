public void later(String s) {
    String xml = load(s);
    xstream.fromXML(xml);
    xml = load("other");
    int z = 1;
}
