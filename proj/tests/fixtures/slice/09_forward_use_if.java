public boolean check(String xml) {
    Object o = xstream.fromXML(xml);
    int k = 2;
    if (o != null) {
        k = 3;
    }
    return k > 2;
}
