Object load(String dir, String name) {
    String path = dir + "/" + name;
    String xml = read(path);
    int size = xml.length();
    Object o = xstream.fromXML(xml);
    System.out.println(size);
    return o;
}
