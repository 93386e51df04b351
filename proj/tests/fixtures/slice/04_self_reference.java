void run(String a) {
    a = h(a);
    xstream.fromXML(a);
}
